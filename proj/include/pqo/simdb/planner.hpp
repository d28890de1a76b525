#pragma once

#include "pqo/core/plan.hpp"
#include "pqo/core/rowcount.hpp"
#include "pqo/simdb/cardinality.hpp"
#include "pqo/simdb/cost.hpp"

namespace pqo::simdb {

// Exhaustive bushy-plan dynamic programming over connected join subsets
// (n <= 8), minimizing estimated cost; ties break on the lexicographically
// smallest plan fingerprint.
PlanTree plan_query(const Schema& schema, const QueryTemplate& tmpl, const CostModel& cost,
                    const QueryInstance& instance, const RowCountMap& overrides,
                    CardinalityMode mode = CardinalityMode::Estimated);

// Every plan the DP search space contains, with estimated cardinalities under
// the given mode; used by brute-force checks and the exact-cardinality
// analyses.
std::vector<PlanTree> enumerate_plans(const Schema& schema, const QueryTemplate& tmpl,
                                      const QueryInstance& instance,
                                      CardinalityMode mode = CardinalityMode::Estimated);

double plan_cost(const Schema& schema, const QueryTemplate& tmpl, const CostModel& cost,
                 const QueryInstance& instance, const PlanTree& plan,
                 const RowCountMap& overrides, CardinalityMode mode);

}  // namespace pqo::simdb
