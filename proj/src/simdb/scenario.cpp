#include "pqo/simdb/scenario.hpp"

#include <algorithm>
#include <cmath>

#include "pqo/core/error.hpp"
#include "pqo/core/rng.hpp"

namespace pqo::simdb {

namespace {

constexpr int64_t kDateBase = 19723;  // 2024-01-01

std::vector<double> uniform_freq(uint32_t domain) {
  return std::vector<double>(domain, 1.0 / static_cast<double>(domain));
}

// Chain A-B-C-D. The predicate sits directly on A's join key toward B, whose
// B-side distribution is heavily skewed; the independence estimator prices
// the join at 1/ndv and misses the hot-key concentration by >100x.
Scenario adversarial_join(uint64_t seed) {
  Scenario s;
  s.name = "adversarial_join";
  s.schema.seed = seed;
  s.schema.skew = 2.0;
  Rng rng(hash_combine(seed, fnv1a64("adversarial_join")));

  const uint32_t kab_dom = 256;

  Table a;
  a.name = "A";
  a.row_count = 2048;
  a.columns.push_back(make_column("kab", ParamType::Int, kab_dom, uniform_freq(kab_dom),
                                  a.row_count, rng.next_u64()));
  a.columns.push_back(
      make_column("pa", ParamType::Int, 8, uniform_freq(8), a.row_count, rng.next_u64()));

  Table b;
  b.name = "B";
  b.row_count = 2048;
  b.columns.push_back(make_column("kab", ParamType::Int, kab_dom,
                                  zipf_frequencies(kab_dom, 2.0), b.row_count,
                                  rng.next_u64()));
  b.columns.push_back(make_column("kbc", ParamType::Int, 64, uniform_freq(64), b.row_count,
                                  rng.next_u64()));

  Table c;
  c.name = "C";
  c.row_count = 512;
  c.columns.push_back(
      make_column("kbc", ParamType::Int, 64, uniform_freq(64), c.row_count, rng.next_u64()));
  c.columns.push_back(
      make_column("kcd", ParamType::Int, 64, uniform_freq(64), c.row_count, rng.next_u64()));

  Table d;
  d.name = "D";
  d.row_count = 512;
  d.columns.push_back(
      make_column("kcd", ParamType::Int, 64, uniform_freq(64), d.row_count, rng.next_u64()));

  s.schema.tables = {a, b, c, d};
  s.schema.edges = {{"A", "kab", "B", "kab", 0.0},
                    {"B", "kbc", "C", "kbc", 0.0},
                    {"C", "kcd", "D", "kcd", 0.0}};
  s.schema.indexes = {{"A", "kab"}, {"A", "pa"}};
  s.schema.finalize();

  s.tmpl.template_id = "adversarial_join";
  s.tmpl.tables = {"A", "B", "C", "D"};
  s.tmpl.join_graph = {{"A", "kab", "B", "kab"},
                       {"B", "kbc", "C", "kbc"},
                       {"C", "kcd", "D", "kcd"}};
  s.tmpl.predicates = {{"A", "kab", PredicateOp::Eq, 0}, {"A", "pa", PredicateOp::Eq, 1}};
  s.tmpl.param_specs = {{ParamType::Int, "A", "kab"}, {ParamType::Int, "A", "pa"}};
  s.tmpl.validate();
  return s;
}

// The date parameter pd controls how concentrated B's join key is on the
// matching C rows: two smooth Gaussian bumps in the key profile make the
// true C-B output swing from a handful of rows to hundreds while the
// estimate stays constant, flipping the fastest operator above that join.
// Near the flip both plans are near-tied, so the decision boundary is
// learnable without regression cliffs. The string parameter pc feeds the
// vocabulary/embedding path.
Scenario param_sensitive(uint64_t seed) {
  Scenario s;
  s.name = "param_sensitive";
  s.schema.seed = seed;
  s.schema.skew = 1.0;
  Rng rng(hash_combine(seed, fnv1a64("param_sensitive")));

  const uint32_t pd_dom = 256;
  const uint32_t pc_dom = 4;
  const uint32_t kab_dom = 256;

  // every pd owns key 8*pd; the skipped keys are low-count filler that
  // inflates the estimator's ndv and keeps the constant estimate small
  std::vector<uint32_t> pd_to_key(pd_dom);
  for (uint32_t pd = 0; pd < pd_dom; ++pd) pd_to_key[pd] = 8 * pd;

  auto key_profile = [](uint32_t pd) {
    auto bump = [&](double center, double width) {
      const double d = (static_cast<double>(pd) - center) / width;
      return std::exp(-d * d);
    };
    return 2 + static_cast<uint32_t>(
                   std::lround(85.0 * (bump(64.0, 13.0) + bump(200.0, 13.0))));
  };

  Table c;
  c.name = "C";
  c.row_count = pc_dom * pd_dom * 16;  // every (pc, pd) combination exactly 16 rows
  c.columns.push_back(make_cyclic_column("pc", ParamType::String, pc_dom, c.row_count, 1));
  {
    Column pd = make_cyclic_column("pd", ParamType::Date, pd_dom, c.row_count, pc_dom);
    pd.date_base = kDateBase;
    c.columns.push_back(std::move(pd));
    c.columns.push_back(
        make_derived_column("kbc", ParamType::Int, c.columns.back(), pd_to_key));
  }

  Table b;
  b.name = "B";
  {
    std::vector<uint32_t> kbc_counts(8 * pd_dom, 1);
    uint32_t total = 0;
    for (uint32_t pd = 0; pd < pd_dom; ++pd) kbc_counts[8 * pd] = key_profile(pd);
    for (uint32_t v : kbc_counts) total += v;
    b.row_count = total;
    b.columns.push_back(
        make_column_from_counts("kbc", ParamType::Int, kbc_counts, rng.next_u64()));
    b.columns.push_back(make_column("kab", ParamType::Int, kab_dom, uniform_freq(kab_dom),
                                    b.row_count, rng.next_u64()));
  }

  Table a;
  a.name = "A";
  a.row_count = 2048;
  a.columns.push_back(make_cyclic_column("kab", ParamType::Int, kab_dom, a.row_count, 1));

  s.schema.tables = {a, b, c};
  s.schema.edges = {{"A", "kab", "B", "kab", 0.0}, {"B", "kbc", "C", "kbc", 0.0}};
  s.schema.indexes = {{"C", "pc"}, {"C", "pd"}};
  s.schema.finalize();

  s.tmpl.template_id = "param_sensitive";
  s.tmpl.tables = {"A", "B", "C"};
  s.tmpl.join_graph = {{"A", "kab", "B", "kab"}, {"B", "kbc", "C", "kbc"}};
  s.tmpl.predicates = {{"C", "pc", PredicateOp::Eq, 0}, {"C", "pd", PredicateOp::Eq, 1}};
  s.tmpl.param_specs = {{ParamType::String, "C", "pc"}, {ParamType::Date, "C", "pd"}};
  s.tmpl.validate();
  return s;
}

// A single rare parameter value (pd = 0) selects most of C; candidate plans
// spread 2-3x there and censor under the adaptive timeout, while cold
// instances stay within the timeout slack. Default latencies are heavy-tailed.
Scenario heavy_tailed(uint64_t seed) {
  Scenario s;
  s.name = "heavy_tailed";
  s.schema.seed = seed;
  s.schema.skew = 1.0;
  Rng rng(hash_combine(seed, fnv1a64("heavy_tailed")));

  const uint32_t pd_dom = 256;

  Table c;
  c.name = "C";
  {
    std::vector<uint32_t> pd_counts(pd_dom, 2);
    pd_counts[0] = 2048;
    pd_counts[1] = 0;
    uint32_t total = 0;
    for (uint32_t v = 0; v < pd_dom; ++v) total += pd_counts[v];
    c.row_count = total;
    c.columns.push_back(
        make_column_from_counts("pd", ParamType::Int, pd_counts, rng.next_u64()));
    c.columns.push_back(make_column("kbc", ParamType::Int, 64, uniform_freq(64), c.row_count,
                                    rng.next_u64()));
  }

  Table b;
  b.name = "B";
  b.row_count = 256;
  b.columns.push_back(
      make_column("kbc", ParamType::Int, 64, uniform_freq(64), b.row_count, rng.next_u64()));
  b.columns.push_back(
      make_column("kab", ParamType::Int, 64, uniform_freq(64), b.row_count, rng.next_u64()));

  Table a;
  a.name = "A";
  a.row_count = 512;
  a.columns.push_back(
      make_column("kab", ParamType::Int, 64, uniform_freq(64), a.row_count, rng.next_u64()));

  s.schema.tables = {a, b, c};
  s.schema.edges = {{"A", "kab", "B", "kab", 0.0}, {"B", "kbc", "C", "kbc", 0.0}};
  s.schema.indexes = {};
  s.schema.finalize();

  s.tmpl.template_id = "heavy_tailed";
  s.tmpl.tables = {"A", "B", "C"};
  s.tmpl.join_graph = {{"A", "kab", "B", "kab"}, {"B", "kbc", "C", "kbc"}};
  s.tmpl.predicates = {{"C", "pd", PredicateOp::Eq, 0}};
  s.tmpl.param_specs = {{ParamType::Int, "C", "pd"}};
  s.tmpl.validate();

  // keep output terms from flattening the plan spread on tail instances
  s.cost.output_per_row = 0.002;
  return s;
}

Scenario distorted_ops(uint64_t seed) {
  Scenario s = adversarial_join(seed);
  s.name = "distorted_ops";
  s.tmpl.template_id = "distorted_ops";
  s.cost = with_seeded_distortion(s.cost, seed, 0.3, 3.0);
  return s;
}

Scenario random_scenario(uint64_t seed) {
  Scenario s;
  s.name = "random";
  s.schema = generate_schema(seed, 4, 1.0);
  s.tmpl.template_id = "random";
  for (const auto& t : s.schema.tables) s.tmpl.tables.push_back(t.name);
  for (const auto& e : s.schema.edges)
    s.tmpl.join_graph.push_back({e.table1, e.column1, e.table2, e.column2});
  int slot = 0;
  for (const auto& t : s.schema.tables) {
    const std::string pred_col = "p_" + t.name;
    s.tmpl.predicates.push_back({t.name, pred_col, PredicateOp::Eq, slot});
    s.tmpl.param_specs.push_back({ParamType::Int, t.name, pred_col});
    ++slot;
  }
  s.tmpl.validate();
  return s;
}

}  // namespace

std::vector<std::string> scenario_names() {
  return {"adversarial_join", "param_sensitive", "heavy_tailed", "distorted_ops", "random"};
}

Scenario make_scenario(const std::string& name, uint64_t seed) {
  if (name == "adversarial_join") return adversarial_join(seed);
  if (name == "param_sensitive") return param_sensitive(seed);
  if (name == "heavy_tailed") return heavy_tailed(seed);
  if (name == "distorted_ops") return distorted_ops(seed);
  if (name == "random") return random_scenario(seed);
  fail("unknown scenario: " + name);
}

Workload make_scenario_workload(const Scenario& scenario, size_t n_instances, uint64_t seed) {
  Workload w;
  w.template_id = scenario.tmpl.template_id;
  Rng rng(hash_combine(seed, fnv1a64("workload:" + scenario.name)));

  auto instance = [&](std::vector<ParamValue> bindings) {
    QueryInstance q;
    q.template_id = w.template_id;
    q.bindings = std::move(bindings);
    return q;
  };

  if (scenario.name == "adversarial_join" || scenario.name == "distorted_ops") {
    // instance 0 pins the hottest key so the >=100x misestimate is always live
    for (size_t i = 0; i < n_instances; ++i) {
      const int64_t key = i == 0 ? 0 : static_cast<int64_t>(rng.uniform_int(4));
      const int64_t pa = static_cast<int64_t>(rng.uniform_int(8));
      w.instances.push_back(
          instance({ParamValue::make_int(key), ParamValue::make_int(pa)}));
    }
    return w;
  }

  if (scenario.name == "param_sensitive") {
    const Column& pc = scenario.schema.table("C").column("pc");
    for (size_t i = 0; i < n_instances; ++i) {
      const auto& literal = pc.dict[rng.uniform_int(pc.dict.size())];
      const int64_t pd = kDateBase + static_cast<int64_t>(rng.uniform_int(256));
      w.instances.push_back(
          instance({ParamValue::make_string(literal), ParamValue::make_date(pd)}));
    }
    return w;
  }

  if (scenario.name == "heavy_tailed") {
    // tail instances sit at the end of collection order: the situation tail
    // reordering exists to fix
    const size_t n_hot = std::max<size_t>(1, n_instances * 15 / 100);
    for (size_t i = 0; i < n_instances; ++i) {
      const bool hot = i + n_hot >= n_instances;
      const int64_t pd = hot ? 0 : 2 + static_cast<int64_t>(rng.uniform_int(254));
      w.instances.push_back(instance({ParamValue::make_int(pd)}));
    }
    return w;
  }

  if (scenario.name == "random") {
    for (size_t i = 0; i < n_instances; ++i) {
      std::vector<ParamValue> bindings;
      for (const auto& spec : scenario.tmpl.param_specs) {
        const Column& col = scenario.schema.table(spec.table).column(spec.column);
        bindings.push_back(
            ParamValue::make_int(static_cast<int64_t>(rng.uniform_int(col.domain_size))));
      }
      w.instances.push_back(instance(std::move(bindings)));
    }
    return w;
  }

  fail("no workload sampler for scenario: " + scenario.name);
}

}  // namespace pqo::simdb
