#pragma once

#include <memory>
#include <string>
#include <vector>

#include "pqo/core/types.hpp"
#include "pqo/simdb/cost.hpp"
#include "pqo/simdb/executor.hpp"
#include "pqo/simdb/schema.hpp"

namespace pqo::simdb {

// A shipped, seeded setup: schema + template + cost model + noise, plus a
// workload sampler. These are the fixtures the demo configs and the
// acceptance suite run against.
struct Scenario {
  std::string name;
  Schema schema;
  QueryTemplate tmpl;
  CostModel cost;
  double noise_level = 0.02;

  SimulatedOptimizer make_optimizer(uint64_t exec_seed) const {
    return SimulatedOptimizer(schema, tmpl, cost, noise_level, exec_seed);
  }
};

std::vector<std::string> scenario_names();

// adversarial_join  one join underestimated >= 100x; distortion 1
// param_sensitive   banded date parameter flips the optimal plan; string
//                   parameter exercises the vocabulary path
// heavy_tailed      a rare parameter value dominates default latency;
//                   candidate plans censor heavily there
// distorted_ops     adversarial_join topology plus seeded per-operator
//                   latency distortion, where cost-optimal != fastest
// random            generate_schema output with one predicate per table
Scenario make_scenario(const std::string& name, uint64_t seed);

Workload make_scenario_workload(const Scenario& scenario, size_t n_instances, uint64_t seed);

}  // namespace pqo::simdb
