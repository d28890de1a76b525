// Temporary scenario diagnostics; not part of the shipped test suite.
#include <algorithm>
#include <cstdio>

#include "pqo/simdb/cardinality.hpp"
#include "pqo/simdb/executor.hpp"
#include "pqo/simdb/planner.hpp"
#include "pqo/simdb/scenario.hpp"

using namespace pqo;
using namespace pqo::simdb;

static QueryInstance inst(const QueryTemplate& t, std::vector<ParamValue> b) {
  QueryInstance q;
  q.template_id = t.template_id;
  q.bindings = std::move(b);
  return q;
}

static void describe(const Scenario& sc, const QueryInstance& q, const char* label) {
  SimulatedOptimizer opt = sc.make_optimizer(1);
  PlanTree def = opt.plan(q, RowCountMap{});
  PlanTree exact = opt.exact_cardinality_plan(q);
  double best = 1e300;
  PlanTree best_plan;
  for (const auto& p : enumerate_plans(sc.schema, sc.tmpl, q)) {
    double lat = opt.true_latency(p, q);
    if (lat < best) {
      best = lat;
      best_plan = p;
    }
  }
  std::printf("[%s/%s]\n  default: %s\n    lat=%.1f\n  exact:   %s\n    lat=%.1f\n  best:    %s\n    lat=%.1f\n",
              sc.name.c_str(), label, canonical_plan_string(def).c_str(),
              opt.true_latency(def, q), canonical_plan_string(exact).c_str(),
              opt.true_latency(exact, q), canonical_plan_string(best_plan).c_str(), best);
  for (const auto& sub : def.join_subplans()) {
    int64_t est = estimate_cardinality(sc.schema, sc.tmpl, q, sub, RowCountMap{});
    int64_t truth = true_cardinality(sc.schema, sc.tmpl, q, sub);
    std::printf("  sub %-8s est=%-8lld true=%-8lld ratio=%.1f\n", sub.to_string().c_str(),
                (long long)est, (long long)truth,
                est ? (double)truth / (double)est : 0.0);
  }
}

int main() {
  {
    Scenario sc = make_scenario("adversarial_join", 5);
    describe(sc, inst(sc.tmpl, {ParamValue::make_int(0), ParamValue::make_int(0)}), "hot");
  }
  {
    Scenario sc = make_scenario("param_sensitive", 5);
    const auto& pc = sc.schema.table("C").column("pc");
    describe(sc, inst(sc.tmpl, {ParamValue::make_string(pc.dict[0]),
                                ParamValue::make_date(19723 + 70)}),
             "hot pd=70");
    describe(sc, inst(sc.tmpl, {ParamValue::make_string(pc.dict[0]),
                                ParamValue::make_date(19723 + 10)}),
             "cold pd=10");
    describe(sc, inst(sc.tmpl, {ParamValue::make_string(pc.dict[0]),
                                ParamValue::make_date(19723 + 205)}),
             "ramp pd=205");
  }
  {
    Scenario sc = make_scenario("heavy_tailed", 5);
    describe(sc, inst(sc.tmpl, {ParamValue::make_int(0)}), "tail pd=0");
    describe(sc, inst(sc.tmpl, {ParamValue::make_int(9)}), "cold pd=9");
    SimulatedOptimizer opt = sc.make_optimizer(1);
    for (int64_t pd : {0LL, 9LL}) {
      auto q = inst(sc.tmpl, {ParamValue::make_int(pd)});
      double best = 1e300, worst = 0;
      for (const auto& p : enumerate_plans(sc.schema, sc.tmpl, q)) {
        double lat = opt.true_latency(p, q);
        best = std::min(best, lat);
        worst = std::max(worst, lat);
      }
      PlanTree def = opt.plan(q, RowCountMap{});
      std::printf("heavy pd=%lld: default=%.1f best=%.1f worst=%.1f worst/best=%.2f\n",
                  (long long)pd, opt.true_latency(def, q), best, worst, worst / best);
    }
  }
  {
    Scenario sc = make_scenario("adversarial_join", 5);
    SimulatedOptimizer opt = sc.make_optimizer(1);
    auto q = inst(sc.tmpl, {ParamValue::make_int(0), ParamValue::make_int(0)});
    PlanTree exact = opt.exact_cardinality_plan(q);
    auto exact_fp = plan_fingerprint(exact);
    for (double f : {10.0, 100.0}) {
      RowCountMap r;
      r.set(SubPlanKey({"A", "B"}), (int64_t)(8 * f));
      PlanTree p = opt.plan(q, r);
      std::printf("override AB*%g -> %s (exact? %d) lat=%.1f\n", f,
                  canonical_plan_string(p).c_str(),
                  plan_fingerprint(p) == exact_fp, opt.true_latency(p, q));
    }
    // compound: AB override with child-card inheritance as RCE would do
    RowCountMap r2;
    r2.set(SubPlanKey({"A", "B"}), 800);
    r2.set(SubPlanKey({"A", "B", "C"}), 6400);
    PlanTree p2 = opt.plan(q, r2);
    std::printf("override AB=800,ABC=6400 -> exact? %d lat=%.1f\n",
                plan_fingerprint(p2) == exact_fp, opt.true_latency(p2, q));
  }
  {
    Scenario sc = make_scenario("distorted_ops", 5);
    std::printf("[distorted_ops] distortions seq=%.2f idx=%.2f hj=%.2f mj=%.2f nl=%.2f\n",
                sc.cost.distortion_seq, sc.cost.distortion_index, sc.cost.distortion_hash,
                sc.cost.distortion_merge, sc.cost.distortion_nl);
    describe(sc, inst(sc.tmpl, {ParamValue::make_int(0), ParamValue::make_int(0)}), "hot");
  }
  return 0;
}
