#pragma once

#include <cstdint>

#include "pqo/core/rowcount.hpp"
#include "pqo/core/types.hpp"
#include "pqo/simdb/schema.hpp"

namespace pqo::simdb {

// Parameter binding mapped into a column's integer domain. May fall outside
// [0, domain); Eq then selects nothing and range ops clamp.
int64_t domain_value(const Column& c, const ParamValue& v);

// Exact result cardinality of the template restricted to `sub`, counted over
// the materialized rows. Disconnected subsets multiply (cross product); the
// induced join graph must be acyclic.
int64_t true_cardinality(const Schema& schema, const QueryTemplate& tmpl,
                         const QueryInstance& instance, const SubPlanKey& sub);

// The planner's belief: per-column histograms for predicates, 1/max(ndv)
// per join edge, attribute independence across everything, overrides applied
// verbatim to matching sub-plans and propagated upward. Clamped to >= 1.
int64_t estimate_cardinality(const Schema& schema, const QueryTemplate& tmpl,
                             const QueryInstance& instance, const SubPlanKey& sub,
                             const RowCountMap& overrides);

// Histogram selectivity of one template predicate under an instance's
// binding, as the planner estimates it.
double predicate_selectivity(const Schema& schema, const QueryTemplate& tmpl,
                             const QueryInstance& instance, size_t predicate_index);

enum class CardinalityMode { True, Estimated };

struct CardinalityOracle {
  const Schema* schema = nullptr;
  const QueryTemplate* tmpl = nullptr;
  CardinalityMode mode = CardinalityMode::Estimated;

  int64_t cardinality(const QueryInstance& instance, const SubPlanKey& sub,
                      const RowCountMap& overrides) const {
    if (mode == CardinalityMode::True) return true_cardinality(*schema, *tmpl, instance, sub);
    return estimate_cardinality(*schema, *tmpl, instance, sub, overrides);
  }
};

}  // namespace pqo::simdb
