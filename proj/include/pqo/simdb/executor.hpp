#pragma once

#include "pqo/simdb/cost.hpp"
#include "pqo/simdb/optimizer.hpp"
#include "pqo/simdb/planner.hpp"

namespace pqo::simdb {

// Ground-truth latency: per-node work from true cardinalities, scaled by the
// hidden per-operator distortion. Noise-free.
double true_latency_ms(const Schema& schema, const QueryTemplate& tmpl, const CostModel& cost,
                       const QueryInstance& instance, const PlanTree& plan);

// Runs the latency simulator with multiplicative noise and the two-level
// timeout policy. Randomness is derived from (seed, instance, fingerprint,
// repeat), so concurrent schedules reproduce identical records.
ExecutionRecord execute_plan(const Schema& schema, const QueryTemplate& tmpl,
                             const CostModel& cost, const QueryInstance& instance,
                             const PlanTree& plan, const ExecOptions& opts,
                             double noise_level, uint64_t seed);

class SimulatedOptimizer : public OptimizerInterface {
 public:
  SimulatedOptimizer(Schema schema, QueryTemplate tmpl, CostModel cost, double noise_level,
                     uint64_t seed)
      : schema_(std::move(schema)),
        tmpl_(std::move(tmpl)),
        cost_(std::move(cost)),
        noise_level_(noise_level),
        seed_(seed) {
    schema_.validate();
    tmpl_.validate();
    cost_.validate();
  }

  const QueryTemplate& query_template() const override { return tmpl_; }

  PlanTree plan(const QueryInstance& instance, const RowCountMap& overrides) const override {
    return plan_query(schema_, tmpl_, cost_, instance, overrides, CardinalityMode::Estimated);
  }

  ExecutionRecord execute(const PlanTree& plan, const QueryInstance& instance,
                          const ExecOptions& opts) const override {
    return execute_plan(schema_, tmpl_, cost_, instance, plan, opts, noise_level_, seed_);
  }

  // Simulator-only extras for analyses; a live adapter has no truth oracle.
  PlanTree exact_cardinality_plan(const QueryInstance& instance) const {
    return plan_query(schema_, tmpl_, cost_, instance, RowCountMap{}, CardinalityMode::True);
  }

  double true_latency(const PlanTree& plan, const QueryInstance& instance) const {
    return true_latency_ms(schema_, tmpl_, cost_, instance, plan);
  }

  const Schema& schema() const { return schema_; }
  const CostModel& cost_model() const { return cost_; }
  double noise_level() const { return noise_level_; }
  uint64_t seed() const { return seed_; }

 private:
  Schema schema_;
  QueryTemplate tmpl_;
  CostModel cost_;
  double noise_level_;
  uint64_t seed_;
};

}  // namespace pqo::simdb
