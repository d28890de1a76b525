#pragma once

#include <cstdint>
#include <map>

#include "pqo/core/plan.hpp"

namespace pqo {

// Sub-plan cardinality overrides fed back into the planner, plus how often
// each key has been perturbed. Join sub-plans only; base tables are never
// overridden.
struct RowCountMap {
  std::map<SubPlanKey, int64_t> rows;
  std::map<SubPlanKey, int> perturbations;

  bool empty() const { return rows.empty(); }
  size_t size() const { return rows.size(); }

  void set(const SubPlanKey& key, int64_t count) {
    require(key.is_join(), "row count overrides apply to join sub-plans only");
    require(count >= 1, "row count override must be >= 1");
    rows[key] = count;
  }

  int perturbation_count(const SubPlanKey& key) const {
    auto it = perturbations.find(key);
    return it == perturbations.end() ? 0 : it->second;
  }

  void validate() const {
    for (const auto& [key, count] : rows) {
      require(key.is_join(), "row count override on a base table: " + key.to_string());
      require(count >= 1, "row count override below 1");
    }
  }
};

}  // namespace pqo
