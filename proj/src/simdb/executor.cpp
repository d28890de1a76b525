#include "pqo/simdb/executor.hpp"

#include <algorithm>

#include "pqo/core/error.hpp"
#include "pqo/core/rng.hpp"
#include "pqo/simdb/cardinality.hpp"

namespace pqo::simdb {

double true_latency_ms(const Schema& schema, const QueryTemplate& tmpl, const CostModel& cost,
                       const QueryInstance& instance, const PlanTree& plan) {
  plan.validate_against(tmpl);
  auto walk = [&](auto&& self, int32_t i) -> double {
    const PlanNode& node = plan.node(i);
    const double out =
        static_cast<double>(true_cardinality(schema, tmpl, instance, plan.table_set(i)));
    if (node.is_leaf) {
      const double base_rows = static_cast<double>(schema.table(node.table).row_count);
      return cost.scan_cost(node.scan, base_rows, out) * cost.distortion(node.scan);
    }
    const double l = static_cast<double>(
        true_cardinality(schema, tmpl, instance, plan.table_set(node.left)));
    const double r = static_cast<double>(
        true_cardinality(schema, tmpl, instance, plan.table_set(node.right)));
    return self(self, node.left) + self(self, node.right) +
           cost.join_cost(node.join, l, r, out) * cost.distortion(node.join);
  };
  return walk(walk, plan.root);
}

ExecutionRecord execute_plan(const Schema& schema, const QueryTemplate& tmpl,
                             const CostModel& cost, const QueryInstance& instance,
                             const PlanTree& plan, const ExecOptions& opts,
                             double noise_level, uint64_t seed) {
  require(opts.repeats >= 1, "repeats must be >= 1");
  require(noise_level >= 0.0 && noise_level < 1.0, "noise level must be in [0, 1)");
  if (opts.timeout_first_ms) require(*opts.timeout_first_ms > 0.0, "timeout must be positive");
  if (opts.timeout_rest_ms) require(*opts.timeout_rest_ms > 0.0, "timeout must be positive");

  const PlanFingerprint fp = plan_fingerprint(plan);
  const double base = true_latency_ms(schema, tmpl, cost, instance, plan);

  ExecutionRecord record;
  record.fingerprint = fp;
  record.timeout_ms = opts.timeout_first_ms;

  for (int repeat = 0; repeat < opts.repeats; ++repeat) {
    uint64_t h = hash_combine(seed, instance.content_hash());
    h = hash_combine(h, fp.hi);
    h = hash_combine(h, fp.lo);
    h = hash_combine(h, static_cast<uint64_t>(repeat));
    Rng rng(h);
    const double noise = noise_level > 0.0 ? rng.uniform(-noise_level, noise_level) : 0.0;
    const double latency = base * (1.0 + noise);

    const auto timeout = repeat == 0 ? opts.timeout_first_ms : opts.timeout_rest_ms;
    if (timeout && latency >= *timeout) {
      // the cut run is recorded at the timeout so every started repeat is
      // visible; the record is censored only when nothing completed
      if (record.latencies_ms.empty()) {
        record.censored = true;
        record.timeout_ms = *timeout;
      }
      record.latencies_ms.push_back(*timeout);
      break;
    }
    record.latencies_ms.push_back(latency);
  }
  record.validate();
  return record;
}

}  // namespace pqo::simdb
