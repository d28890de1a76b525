#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "pqo/rce/rce.hpp"
#include "pqo/simdb/cardinality.hpp"
#include "pqo/simdb/executor.hpp"
#include "pqo/simdb/scenario.hpp"

using namespace pqo;
using namespace pqo::rce;
using namespace pqo::simdb;

namespace {

QueryInstance make_instance(const QueryTemplate& tmpl, std::vector<ParamValue> bindings) {
  QueryInstance q;
  q.template_id = tmpl.template_id;
  q.bindings = std::move(bindings);
  return q;
}

// Bushy setup: the default plan joins (A join B), estimate 40, with
// (C join D), estimate 17; B and D are large so joining across the middle
// edge early is unattractive.
Scenario bushy_scenario() {
  Scenario s;
  s.name = "bushy";
  Rng rng(99);

  auto uniform = [&](uint32_t dom) { return zipf_frequencies(dom, 0.0); };

  Table a;
  a.name = "A";
  a.row_count = 40;
  a.columns.push_back(
      make_column("kab", ParamType::Int, 6400, uniform(6400), 40, rng.next_u64()));
  a.columns.push_back(make_column("pa", ParamType::Int, 4, uniform(4), 40, rng.next_u64()));
  Table b;
  b.name = "B";
  b.row_count = 6400;
  b.columns.push_back(
      make_column("kab", ParamType::Int, 6400, uniform(6400), 6400, rng.next_u64()));
  b.columns.push_back(
      make_column("kbd", ParamType::Int, 44, uniform(44), 6400, rng.next_u64()));
  Table c;
  c.name = "C";
  c.row_count = 17;
  c.columns.push_back(
      make_column("kcd", ParamType::Int, 6400, uniform(6400), 17, rng.next_u64()));
  Table d;
  d.name = "D";
  d.row_count = 6400;
  d.columns.push_back(
      make_column("kcd", ParamType::Int, 6400, uniform(6400), 6400, rng.next_u64()));
  d.columns.push_back(
      make_column("kbd", ParamType::Int, 44, uniform(44), 6400, rng.next_u64()));

  s.schema.tables = {a, b, c, d};
  s.schema.edges = {{"A", "kab", "B", "kab", 0.0},
                    {"B", "kbd", "D", "kbd", 0.0},
                    {"C", "kcd", "D", "kcd", 0.0}};
  s.schema.finalize();

  s.tmpl.template_id = "bushy";
  s.tmpl.tables = {"A", "B", "C", "D"};
  s.tmpl.join_graph = {{"A", "kab", "B", "kab"},
                       {"B", "kbd", "D", "kbd"},
                       {"C", "kcd", "D", "kcd"}};
  s.tmpl.predicates = {{"A", "pa", PredicateOp::Ge, 0}};
  s.tmpl.param_specs = {{ParamType::Int, "A", "pa"}};
  s.tmpl.validate();
  return s;
}

}  // namespace

TEST_CASE("perturbation candidates reproduce the worked example sets") {
  CHECK(perturbation_candidates(40.0, 10.0, 1) == std::vector<int64_t>{4, 40, 400});
  CHECK(perturbation_candidates(17.0, 10.0, 1) == std::vector<int64_t>{1, 17, 170});
}

TEST_CASE("perturbation candidates below the range floor clamp to one") {
  // log10(5) < 2, so the grid starts at exactly w * 10^-log10(5) = 1
  const auto grid = perturbation_candidates(5.0, 10.0, 2);
  REQUIRE(grid.size() == 5);
  CHECK(grid.front() == 1);
  CHECK(grid.back() == 10000);  // w * b^(2m - log_b w) = b^(2m)
}

TEST_CASE("perturbation grid has 2m+1 entries and keeps w when log_b(w) >= m") {
  for (int m : {1, 2, 3}) {
    const auto grid = perturbation_candidates(1000.0, 10.0, m);
    CHECK(grid.size() == static_cast<size_t>(2 * m + 1));
    CHECK(std::count(grid.begin(), grid.end(), 1000) == 1);
  }
  // nonpositive estimates are treated as w = 1
  const auto degenerate = perturbation_candidates(0.0, 10.0, 1);
  CHECK(degenerate == std::vector<int64_t>{1, 10, 100});
}

TEST_CASE("sample_perturbations touches only join sub-plans and respects limits") {
  Scenario sc = bushy_scenario();
  SimulatedOptimizer opt = sc.make_optimizer(3);
  auto q = make_instance(sc.tmpl, {ParamValue::make_int(0)});
  PlanTree plan = opt.plan(q, RowCountMap{});

  RceParams params;
  params.subplan_perturbation_limit = 2;
  Rng rng(1);

  RowCountMap r = sample_perturbations(plan, RowCountMap{}, params, rng);
  CHECK(!r.rows.empty());
  for (const auto& [key, count] : r.rows) {
    CHECK(key.is_join());
    CHECK(count >= 1);
    CHECK(r.perturbation_count(key) == 1);
  }

  // every join sub-plan of the plan got one perturbation
  CHECK(r.rows.size() == plan.join_subplans().size());

  // counters cap further perturbation per key
  RowCountMap r2 = sample_perturbations(plan, r, params, rng);
  RowCountMap r3 = sample_perturbations(plan, r2, params, rng);
  for (const auto& [key, count] : r3.perturbations) CHECK(count <= 2);

  // keys not in the plan are inherited untouched
  RowCountMap with_extra = r;
  SubPlanKey foreign({"A", "B", "C"});
  bool had_foreign = with_extra.rows.count(foreign) > 0;
  (void)had_foreign;
  RowCountMap r4 = sample_perturbations(plan, with_extra, params, rng);
  for (const auto& [key, count] : with_extra.rows)
    CHECK(r4.rows.count(key) == 1);
}

TEST_CASE("generation zero contains exactly the default plan") {
  Scenario sc = bushy_scenario();
  SimulatedOptimizer opt = sc.make_optimizer(3);
  auto q = make_instance(sc.tmpl, {ParamValue::make_int(0)});
  RceParams params;
  params.generations = 0;
  Rng rng(1);
  CandidateSet set = row_count_evolution(q, opt, params, rng);
  REQUIRE(set.size() == 1);
  CHECK(set.candidates[0].generation == 0);
  CHECK(set.candidates[0].fingerprint == plan_fingerprint(opt.plan(q, RowCountMap{})));
  CHECK(set.candidates[0].row_counts.empty());
}

TEST_CASE("worked bushy example: the sampled override flips the plan") {
  Scenario sc = bushy_scenario();
  SimulatedOptimizer opt = sc.make_optimizer(3);
  auto q = make_instance(sc.tmpl, {ParamValue::make_int(0)});
  PlanTree def = opt.plan(q, RowCountMap{});

  // the base plan must expose the two estimated join cardinalities 40 and 17
  std::map<std::string, double> cards;
  for (int32_t i = 0; i < static_cast<int32_t>(def.nodes.size()); ++i)
    if (!def.node(i).is_leaf) cards[def.table_set(i).to_string()] = def.node(i).estimated_cardinality;
  REQUIRE(cards.count("A+B") == 1);
  REQUIRE(cards.count("C+D") == 1);
  CHECK(cards["A+B"] == doctest::Approx(40));
  CHECK(cards["C+D"] == doctest::Approx(17));

  RowCountMap overrides;
  overrides.set(SubPlanKey({"A", "B"}), 400);
  overrides.set(SubPlanKey({"C", "D"}), 17);
  PlanTree flipped = opt.plan(q, overrides);
  CHECK(plan_fingerprint(flipped) != plan_fingerprint(def));
}

TEST_CASE("evolution recovers the exact-cardinality plan on the adversarial scenario") {
  Scenario sc = make_scenario("adversarial_join", 5);
  SimulatedOptimizer opt = sc.make_optimizer(5);
  auto q = make_instance(sc.tmpl, {ParamValue::make_int(0), ParamValue::make_int(0)});
  const PlanFingerprint exact = plan_fingerprint(opt.exact_cardinality_plan(q));

  RceParams params;  // paper defaults
  params.seed = 17;
  Rng rng(params.seed);
  CandidateSet set = row_count_evolution(q, opt, params, rng);
  CHECK(set.contains(exact));

  // candidate-count bound
  CHECK(set.size() <= 1 + static_cast<size_t>(params.generations *
                                              params.samples_per_generation *
                                              params.perturbations_per_plan));
  CHECK(set.size() <= static_cast<size_t>(params.per_instance_plan_limit));

  // replay property: the stored row counts reproduce each plan
  for (const auto& c : set.candidates) {
    PlanTree replayed = opt.plan(q, c.row_counts);
    CHECK(plan_fingerprint(replayed) == c.fingerprint);
  }

  // join-only invariant
  for (const auto& c : set.candidates)
    for (const auto& [key, count] : c.row_counts.rows) CHECK(key.size() >= 2);
}

TEST_CASE("workload generation unions with dedup and records provenance") {
  Scenario sc = make_scenario("param_sensitive", 5);
  SimulatedOptimizer opt = sc.make_optimizer(5);
  Workload w = make_scenario_workload(sc, 3, 5);

  RceParams params;
  params.seed = 4;
  params.generations = 1;
  params.samples_per_generation = 2;
  params.perturbations_per_plan = 5;

  CandidateSet merged = workload_candidate_generation(w, opt, params);

  // singleton union equals per-instance evolution
  Workload single;
  single.template_id = w.template_id;
  single.instances = {w.instances[0]};
  CandidateSet alone = workload_candidate_generation(single, opt, params);
  Rng rng(hash_combine(params.seed, hash_combine(fnv1a64("rce"), 0ull)));
  CandidateSet direct = row_count_evolution(w.instances[0], opt, params, rng, 0);
  REQUIRE(alone.size() == direct.size());
  for (size_t i = 0; i < alone.size(); ++i)
    CHECK(alone.candidates[i].fingerprint == direct.candidates[i].fingerprint);

  // every instance's default plan is present
  for (const auto& q : w.instances)
    CHECK(merged.contains(plan_fingerprint(opt.plan(q, RowCountMap{}))));

  // dedup: candidates unique by fingerprint
  std::set<PlanFingerprint> fps;
  for (const auto& c : merged.candidates) CHECK(fps.insert(c.fingerprint).second);
}

TEST_CASE("total plan limit keeps only defaults afterwards") {
  Scenario sc = make_scenario("param_sensitive", 5);
  SimulatedOptimizer opt = sc.make_optimizer(5);
  Workload w = make_scenario_workload(sc, 6, 5);

  RceParams params;
  params.seed = 4;
  params.total_plan_limit = 2;  // hit immediately after the first instance

  CandidateSet merged = workload_candidate_generation(w, opt, params);
  // instances after the first contribute generation-0 plans only
  int64_t max_source_with_evolution = -1;
  for (const auto& c : merged.candidates)
    if (c.generation > 0) max_source_with_evolution = std::max(max_source_with_evolution,
                                                               c.source_instance);
  CHECK(max_source_with_evolution <= 0);
  for (const auto& q : w.instances)
    CHECK(merged.contains(plan_fingerprint(opt.plan(q, RowCountMap{}))));
}

TEST_CASE("workload generation is deterministic and independent of worker count") {
  Scenario sc = make_scenario("heavy_tailed", 5);
  SimulatedOptimizer opt = sc.make_optimizer(5);
  Workload w = make_scenario_workload(sc, 8, 5);

  RceParams params;
  params.seed = 21;
  params.generations = 2;
  params.samples_per_generation = 4;
  params.perturbations_per_plan = 6;

  CandidateSet a = workload_candidate_generation(w, opt, params, 1);
  CandidateSet b = workload_candidate_generation(w, opt, params, 3);
  REQUIRE(a.size() == b.size());
  for (size_t i = 0; i < a.size(); ++i) {
    CHECK(a.candidates[i].fingerprint == b.candidates[i].fingerprint);
    CHECK(a.candidates[i].generation == b.candidates[i].generation);
    CHECK(a.candidates[i].source_instance == b.candidates[i].source_instance);
  }
}

TEST_CASE("candidate sets round-trip through JSONL") {
  Scenario sc = bushy_scenario();
  SimulatedOptimizer opt = sc.make_optimizer(3);
  Workload w;
  w.template_id = sc.tmpl.template_id;
  w.instances = {make_instance(sc.tmpl, {ParamValue::make_int(0)})};

  RceParams params;
  params.seed = 9;
  params.generations = 2;
  params.samples_per_generation = 3;
  params.perturbations_per_plan = 4;
  CandidateSet set = workload_candidate_generation(w, opt, params);

  const std::string path = "/tmp/pqo_test_candidates.jsonl";
  save_candidates(set, path);
  CandidateSet back = load_candidates(path);
  REQUIRE(back.size() == set.size());
  for (size_t i = 0; i < set.size(); ++i) {
    CHECK(back.candidates[i].fingerprint == set.candidates[i].fingerprint);
    CHECK(back.candidates[i].generation == set.candidates[i].generation);
    CHECK(back.candidates[i].row_counts.rows == set.candidates[i].row_counts.rows);
  }
}
