#pragma once

#include <optional>

#include "pqo/core/dataset.hpp"
#include "pqo/core/rowcount.hpp"
#include "pqo/core/types.hpp"

namespace pqo::simdb {

struct ExecOptions {
  int repeats = 3;
  // First repeat runs with the base (never-tightened) timeout; remaining
  // repeats run with the tightened one. Empty means untimed.
  std::optional<double> timeout_first_ms;
  std::optional<double> timeout_rest_ms;
};

// The seam where a live-DBMS adapter (hint-forcing client) would attach.
// plan() must be deterministic in (instance, overrides); execute() must be
// deterministic in (plan, instance, seed).
class OptimizerInterface {
 public:
  virtual ~OptimizerInterface() = default;

  virtual const QueryTemplate& query_template() const = 0;
  virtual PlanTree plan(const QueryInstance& instance, const RowCountMap& overrides) const = 0;
  virtual ExecutionRecord execute(const PlanTree& plan, const QueryInstance& instance,
                                  const ExecOptions& opts) const = 0;
};

}  // namespace pqo::simdb
