#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "pqo/core/rng.hpp"
#include "pqo/simdb/cardinality.hpp"
#include "pqo/simdb/executor.hpp"
#include "pqo/simdb/planner.hpp"
#include "pqo/simdb/scenario.hpp"
#include "pqo/simdb/schema.hpp"

using namespace pqo;
using namespace pqo::simdb;

namespace {

// Independent oracle: nested-loop row enumeration over the materialized data.
int64_t brute_force_cardinality(const Schema& schema, const QueryTemplate& tmpl,
                                const QueryInstance& instance, const SubPlanKey& sub) {
  std::vector<const Table*> tables;
  for (const auto& name : sub.tables) tables.push_back(&schema.table(name));

  auto passes_predicates = [&](const Table& t, uint32_t row) {
    for (size_t slot = 0; slot < tmpl.predicates.size(); ++slot) {
      const auto& p = tmpl.predicates[slot];
      if (p.table != t.name) continue;
      const Column& c = t.column(p.column);
      const int64_t bound =
          domain_value(c, instance.bindings[static_cast<size_t>(p.param_slot)]);
      const int64_t v = static_cast<int64_t>(c.values[row]);
      switch (p.op) {
        case PredicateOp::Eq:
          if (v != bound) return false;
          break;
        case PredicateOp::Le:
          if (v > bound) return false;
          break;
        case PredicateOp::Ge:
          if (v < bound) return false;
          break;
      }
    }
    return true;
  };

  std::vector<uint32_t> rows(tables.size(), 0);
  int64_t count = 0;
  auto recurse = [&](auto&& self, size_t depth) -> void {
    if (depth == tables.size()) {
      for (const auto& e : tmpl.join_graph) {
        int i1 = -1, i2 = -1;
        for (size_t k = 0; k < tables.size(); ++k) {
          if (tables[k]->name == e.table1) i1 = static_cast<int>(k);
          if (tables[k]->name == e.table2) i2 = static_cast<int>(k);
        }
        if (i1 < 0 || i2 < 0) continue;
        const uint32_t v1 = tables[static_cast<size_t>(i1)]->column(e.column1).values[rows[static_cast<size_t>(i1)]];
        const uint32_t v2 = tables[static_cast<size_t>(i2)]->column(e.column2).values[rows[static_cast<size_t>(i2)]];
        if (v1 != v2) return;
      }
      ++count;
      return;
    }
    for (uint32_t r = 0; r < tables[depth]->row_count; ++r) {
      if (!passes_predicates(*tables[depth], r)) continue;
      rows[depth] = r;
      self(self, depth + 1);
    }
  };
  recurse(recurse, 0);
  return count;
}

QueryInstance make_instance(const QueryTemplate& tmpl, std::vector<ParamValue> bindings) {
  QueryInstance q;
  q.template_id = tmpl.template_id;
  q.bindings = std::move(bindings);
  return q;
}

// 3-row hand-checkable schema: A(k, p), B(k).
Schema tiny_schema() {
  Schema s;
  Table a;
  a.name = "A";
  a.row_count = 3;
  Column ak;
  ak.name = "k";
  ak.type = ParamType::Int;
  ak.domain_size = 3;
  ak.freq = {1.0 / 3, 1.0 / 3, 1.0 / 3};
  ak.values = {0, 1, 1};
  ak.rebuild_counts();
  Column ap = ak;
  ap.name = "p";
  ap.values = {0, 0, 2};
  ap.rebuild_counts();
  a.columns = {ak, ap};
  Table b;
  b.name = "B";
  b.row_count = 3;
  Column bk = ak;
  bk.values = {1, 1, 2};
  bk.rebuild_counts();
  b.columns = {bk};
  s.tables = {a, b};
  s.edges = {{"A", "k", "B", "k", 0.0}};
  s.finalize();
  return s;
}

QueryTemplate tiny_template() {
  QueryTemplate t;
  t.template_id = "tiny";
  t.tables = {"A", "B"};
  t.join_graph = {{"A", "k", "B", "k"}};
  t.predicates = {{"A", "p", PredicateOp::Eq, 0}};
  t.param_specs = {{ParamType::Int, "A", "p"}};
  t.validate();
  return t;
}

}  // namespace

TEST_CASE("generate_schema is deterministic per seed") {
  Schema s1 = generate_schema(1, 4, 0.0);
  Schema s2 = generate_schema(1, 4, 0.0);
  REQUIRE(s1.tables.size() == s2.tables.size());
  for (size_t i = 0; i < s1.tables.size(); ++i) {
    CHECK(s1.tables[i].row_count == s2.tables[i].row_count);
    for (size_t c = 0; c < s1.tables[i].columns.size(); ++c)
      CHECK(s1.tables[i].columns[c].values == s2.tables[i].columns[c].values);
  }
}

TEST_CASE("skew zero yields equi-frequent columns") {
  Schema s = generate_schema(3, 3, 0.0);
  for (const auto& t : s.tables)
    for (const auto& c : t.columns) {
      const auto [lo, hi] = std::minmax_element(c.counts.begin(), c.counts.end());
      CHECK(*hi - *lo <= 1);  // largest-remainder uniform
    }
}

TEST_CASE("different seeds give different join selectivities") {
  Schema s1 = generate_schema(1, 4, 1.0);
  Schema s2 = generate_schema(2, 4, 1.0);
  bool differs = s1.edges.size() != s2.edges.size();
  for (size_t i = 0; !differs && i < s1.edges.size(); ++i)
    differs = s1.edges[i].true_selectivity != s2.edges[i].true_selectivity;
  CHECK(differs);
}

TEST_CASE("generate_schema rejects bad arguments") {
  CHECK_THROWS_AS(generate_schema(1, 1, 0.0), Error);
  CHECK_THROWS_AS(generate_schema(1, 9, 0.0), Error);
  CHECK_THROWS_AS(generate_schema(1, 4, -1.0), Error);
}

TEST_CASE("true cardinality: base relations and empty results") {
  Schema s = tiny_schema();
  QueryTemplate t = tiny_template();
  // no predicate on B: base relation count
  CHECK(true_cardinality(s, t, make_instance(t, {ParamValue::make_int(0)}), SubPlanKey({"B"})) ==
        3);
  // absent value selects nothing
  CHECK(true_cardinality(s, t, make_instance(t, {ParamValue::make_int(7)}), SubPlanKey({"A"})) ==
        0);
}

TEST_CASE("true cardinality matches a hand-enumerated 3-row join") {
  Schema s = tiny_schema();
  QueryTemplate t = tiny_template();
  // p = 0 selects A rows {0 (k=0), 1 (k=1)}; B has keys {1, 1, 2}:
  // row 0 matches nothing; row 1 matches two B rows -> 2
  auto q = make_instance(t, {ParamValue::make_int(0)});
  CHECK(true_cardinality(s, t, q, SubPlanKey({"A", "B"})) == 2);
  CHECK(brute_force_cardinality(s, t, q, SubPlanKey({"A", "B"})) == 2);
}

TEST_CASE("true cardinality agrees with brute force on random schemas") {
  for (uint64_t seed : {11ull, 12ull, 13ull}) {
    Scenario sc = make_scenario("random", seed);
    // shrink: use tiny row counts by regenerating a small schema
    Schema small;
    small.seed = seed;
    Rng rng(seed);
    Table a, b, c;
    a.name = "A";
    a.row_count = 12;
    a.columns.push_back(make_column("k1", ParamType::Int, 4, zipf_frequencies(4, 1.0),
                                    a.row_count, rng.next_u64()));
    a.columns.push_back(make_column("p_A", ParamType::Int, 3, zipf_frequencies(3, 0.5),
                                    a.row_count, rng.next_u64()));
    b.name = "B";
    b.row_count = 15;
    b.columns.push_back(make_column("k1", ParamType::Int, 4, zipf_frequencies(4, 0.0),
                                    b.row_count, rng.next_u64()));
    b.columns.push_back(make_column("k2", ParamType::Int, 5, zipf_frequencies(5, 1.5),
                                    b.row_count, rng.next_u64()));
    c.name = "C";
    c.row_count = 9;
    c.columns.push_back(make_column("k2", ParamType::Int, 5, zipf_frequencies(5, 0.7),
                                    c.row_count, rng.next_u64()));
    small.tables = {a, b, c};
    small.edges = {{"A", "k1", "B", "k1", 0.0}, {"B", "k2", "C", "k2", 0.0}};
    small.finalize();

    QueryTemplate t;
    t.template_id = "small";
    t.tables = {"A", "B", "C"};
    t.join_graph = {{"A", "k1", "B", "k1"}, {"B", "k2", "C", "k2"}};
    t.predicates = {{"A", "p_A", PredicateOp::Le, 0}};
    t.param_specs = {{ParamType::Int, "A", "p_A"}};
    t.validate();

    for (int64_t bound = 0; bound < 3; ++bound) {
      auto q = make_instance(t, {ParamValue::make_int(bound)});
      for (const auto& sub :
           {SubPlanKey({"A"}), SubPlanKey({"B"}), SubPlanKey({"A", "B"}),
            SubPlanKey({"B", "C"}), SubPlanKey({"A", "B", "C"})}) {
        CHECK(true_cardinality(small, t, q, sub) == brute_force_cardinality(small, t, q, sub));
      }
    }
    (void)sc;
  }
}

TEST_CASE("estimates honor overrides verbatim") {
  Schema s = tiny_schema();
  QueryTemplate t = tiny_template();
  auto q = make_instance(t, {ParamValue::make_int(0)});
  RowCountMap overrides;
  overrides.set(SubPlanKey({"A", "B"}), 400);
  CHECK(estimate_cardinality(s, t, q, SubPlanKey({"A", "B"}), overrides) == 400);
  CHECK(estimate_cardinality(s, t, q, SubPlanKey({"A", "B"}), RowCountMap{}) != 400);
}

TEST_CASE("estimate equals truth when independence holds exactly") {
  // two cyclic columns tile 36 rows: joint counts are exact products
  Schema s;
  Table a;
  a.name = "A";
  a.row_count = 36;
  a.columns.push_back(make_cyclic_column("p", ParamType::Int, 6, a.row_count, 1));
  a.columns.push_back(make_cyclic_column("q", ParamType::Int, 6, a.row_count, 6));
  Table b;
  b.name = "B";
  b.row_count = 36;
  b.columns.push_back(make_cyclic_column("k", ParamType::Int, 6, b.row_count, 1));
  a.columns.push_back(make_cyclic_column("k", ParamType::Int, 6, a.row_count, 1));
  s.tables = {a, b};
  s.edges = {{"A", "k", "B", "k", 0.0}};
  s.finalize();

  QueryTemplate t;
  t.template_id = "indep";
  t.tables = {"A", "B"};
  t.join_graph = {{"A", "k", "B", "k"}};
  t.predicates = {{"A", "p", PredicateOp::Eq, 0}, {"A", "q", PredicateOp::Eq, 1}};
  t.param_specs = {{ParamType::Int, "A", "p"}, {ParamType::Int, "A", "q"}};
  t.validate();

  auto q = make_instance(t, {ParamValue::make_int(2), ParamValue::make_int(3)});
  CHECK(estimate_cardinality(s, t, q, SubPlanKey({"A"}), RowCountMap{}) ==
        true_cardinality(s, t, q, SubPlanKey({"A"})));
  // k cyclic with stride 1 correlates with p; use the A-only case for the
  // exact-independence claim and check the join estimate on predicate-free B
  CHECK(estimate_cardinality(s, t, q, SubPlanKey({"B"}), RowCountMap{}) == 36);
}

TEST_CASE("correlated predicate columns are underestimated") {
  Schema s;
  Table a;
  a.name = "A";
  a.row_count = 64;
  a.columns.push_back(make_column("p", ParamType::Int, 8, zipf_frequencies(8, 1.0),
                                  a.row_count, 99));
  std::vector<uint32_t> identity(8);
  for (uint32_t v = 0; v < 8; ++v) identity[v] = v;
  a.columns.push_back(make_derived_column("q", ParamType::Int, a.columns[0], identity));
  Table b;
  b.name = "B";
  b.row_count = 8;
  b.columns.push_back(make_cyclic_column("k", ParamType::Int, 8, b.row_count, 1));
  a.columns.push_back(make_cyclic_column("k", ParamType::Int, 8, a.row_count, 1));
  s.tables = {a, b};
  s.edges = {{"A", "k", "B", "k", 0.0}};
  s.finalize();

  QueryTemplate t;
  t.template_id = "corr";
  t.tables = {"A", "B"};
  t.join_graph = {{"A", "k", "B", "k"}};
  t.predicates = {{"A", "p", PredicateOp::Eq, 0}, {"A", "q", PredicateOp::Eq, 1}};
  t.param_specs = {{ParamType::Int, "A", "p"}, {ParamType::Int, "A", "q"}};
  t.validate();

  // both predicates hit the same hot value: truth = cnt(0), estimate =
  // cnt(0)^2 / n < truth
  auto q = make_instance(t, {ParamValue::make_int(0), ParamValue::make_int(0)});
  const int64_t est = estimate_cardinality(s, t, q, SubPlanKey({"A"}), RowCountMap{});
  const int64_t truth = true_cardinality(s, t, q, SubPlanKey({"A"}));
  CHECK(est < truth);
}

TEST_CASE("planner: empty overrides reproduce the default plan") {
  Scenario sc = make_scenario("adversarial_join", 5);
  Workload w = make_scenario_workload(sc, 3, 5);
  SimulatedOptimizer opt = sc.make_optimizer(5);
  for (const auto& q : w.instances) {
    PlanTree p1 = opt.plan(q, RowCountMap{});
    PlanTree p2 = opt.plan(q, RowCountMap{});
    CHECK(plan_fingerprint(p1) == plan_fingerprint(p2));
  }
}

TEST_CASE("planner: default plan is cost-minimal among all enumerable plans") {
  Scenario sc = make_scenario("param_sensitive", 5);
  Workload w = make_scenario_workload(sc, 4, 5);
  for (const auto& q : w.instances) {
    PlanTree def = plan_query(sc.schema, sc.tmpl, sc.cost, q, RowCountMap{});
    const double def_cost = plan_cost(sc.schema, sc.tmpl, sc.cost, q, def, RowCountMap{},
                                      CardinalityMode::Estimated);
    double best = def_cost;
    for (const auto& p : enumerate_plans(sc.schema, sc.tmpl, q)) {
      best = std::min(best, plan_cost(sc.schema, sc.tmpl, sc.cost, q, p, RowCountMap{},
                                      CardinalityMode::Estimated));
    }
    CHECK(def_cost == doctest::Approx(best).epsilon(1e-12));
  }
}

TEST_CASE("planner: exact-cardinality plan minimizes true latency when undistorted") {
  Scenario sc = make_scenario("adversarial_join", 5);  // distortion = 1
  Workload w = make_scenario_workload(sc, 3, 5);
  SimulatedOptimizer opt = sc.make_optimizer(5);
  for (const auto& q : w.instances) {
    PlanTree exact = opt.exact_cardinality_plan(q);
    const double exact_latency = opt.true_latency(exact, q);
    for (const auto& p : enumerate_plans(sc.schema, sc.tmpl, q)) {
      CHECK(opt.true_latency(p, q) >= exact_latency - 1e-9);
    }
  }
}

TEST_CASE("planner: inflating a join estimate flips the plan") {
  Scenario sc = make_scenario("adversarial_join", 5);
  SimulatedOptimizer opt = sc.make_optimizer(5);
  auto q = make_instance(sc.tmpl, {ParamValue::make_int(0), ParamValue::make_int(0)});
  const PlanFingerprint def = plan_fingerprint(opt.plan(q, RowCountMap{}));
  const SubPlanKey ab({"A", "B"});
  const int64_t base = estimate_cardinality(sc.schema, sc.tmpl, q, ab, RowCountMap{});

  // binary-search the smallest power-of-10 factor that changes the plan
  double factor = 1.0;
  bool flipped = false;
  for (int e = 1; e <= 6 && !flipped; ++e) {
    factor = std::pow(10.0, e);
    RowCountMap overrides;
    overrides.set(ab, static_cast<int64_t>(static_cast<double>(base) * factor));
    flipped = plan_fingerprint(opt.plan(q, overrides)) != def;
  }
  CHECK(flipped);
  CHECK(factor <= 100.0);  // the adversarial misestimate is recoverable within b^m
}

TEST_CASE("executor: noiseless runs repeat exactly and censор at the timeout") {
  Scenario sc = make_scenario("heavy_tailed", 5);
  SimulatedOptimizer noiseless(sc.schema, sc.tmpl, sc.cost, 0.0, 9);
  auto q = make_instance(sc.tmpl, {ParamValue::make_int(3)});
  PlanTree plan = noiseless.plan(q, RowCountMap{});

  ExecOptions untimed;
  untimed.repeats = 3;
  ExecutionRecord r = noiseless.execute(plan, q, untimed);
  REQUIRE(r.latencies_ms.size() == 3);
  CHECK(r.latencies_ms[0] == r.latencies_ms[1]);
  CHECK(r.latencies_ms[1] == r.latencies_ms[2]);
  CHECK(!r.censored);

  ExecOptions timed;
  timed.repeats = 3;
  timed.timeout_first_ms = r.latencies_ms[0] * 0.5;
  timed.timeout_rest_ms = r.latencies_ms[0] * 0.5;
  ExecutionRecord cut = noiseless.execute(plan, q, timed);
  CHECK(cut.censored);
  CHECK(estimated_latency(cut) == doctest::Approx(r.latencies_ms[0] * 0.5));
}

TEST_CASE("executor: noisy repeats differ and the estimate takes their minimum") {
  Scenario sc = make_scenario("heavy_tailed", 5);
  SimulatedOptimizer opt = sc.make_optimizer(11);
  auto q = make_instance(sc.tmpl, {ParamValue::make_int(3)});
  PlanTree plan = opt.plan(q, RowCountMap{});
  ExecOptions opts;
  opts.repeats = 3;
  ExecutionRecord r = opt.execute(plan, q, opts);
  REQUIRE(r.latencies_ms.size() == 3);
  CHECK((r.latencies_ms[0] != r.latencies_ms[1] || r.latencies_ms[1] != r.latencies_ms[2]));
  CHECK(estimated_latency(r) ==
        doctest::Approx(*std::min_element(r.latencies_ms.begin(), r.latencies_ms.end())));

  // determinism for a fixed seed, regardless of call order
  ExecutionRecord again = opt.execute(plan, q, opts);
  CHECK(again.latencies_ms == r.latencies_ms);
}

TEST_CASE("fingerprint soundness over the full enumerable plan space") {
  Scenario sc = make_scenario("adversarial_join", 5);
  auto q = make_instance(sc.tmpl, {ParamValue::make_int(0), ParamValue::make_int(0)});
  auto plans = enumerate_plans(sc.schema, sc.tmpl, q);
  std::set<std::string> canon;
  std::set<PlanFingerprint> fps;
  for (const auto& p : plans) {
    canon.insert(canonical_plan_string(p));
    fps.insert(plan_fingerprint(p));
  }
  CHECK(canon.size() == fps.size());
  CHECK(plans.size() >= canon.size());
}
