#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pqo/core/dataset.hpp"
#include "pqo/rce/rce.hpp"
#include "pqo/simdb/optimizer.hpp"

namespace pqo::collect {

struct CollectionPolicy {
  int repeats = 3;                  // k
  double timeout_slack = 1.1;       // alpha
  double plan_cover_epsilon = 0.2;  // eps
  double plan_cover_delta = 0.01;   // delta
  int bootstrap_instances = 100;    // N executed against the full plan matrix
  bool tail_reorder = true;

  void validate() const;
};

struct PlanCover {
  std::vector<PlanFingerprint> plans;  // greedy pick order
  double coverage = 0.0;               // fraction of bootstrap instances covered
  std::map<PlanFingerprint, std::vector<int64_t>> covered_instances;

  bool contains(const PlanFingerprint& fp) const {
    return covered_instances.count(fp) > 0;
  }
};

// Collection order for heavy-tailed workloads: slowest defaults first,
// stable on ties.
std::vector<size_t> tail_reorder_order(const std::vector<double>& default_latencies);
Workload tail_reorder(const Workload& w, const std::vector<double>& default_latencies);

// Running mean of estimated latencies per plan across instances; drives the
// ascending execution order that tightens timeouts quickly.
class LatencyHistory {
 public:
  void update(const PlanFingerprint& fp, double latency_ms) {
    auto& [sum, count] = totals_[fp];
    sum += latency_ms;
    count += 1;
  }
  std::optional<double> mean(const PlanFingerprint& fp) const {
    auto it = totals_.find(fp);
    if (it == totals_.end()) return std::nullopt;
    return it->second.first / static_cast<double>(it->second.second);
  }

 private:
  std::map<PlanFingerprint, std::pair<double, int64_t>> totals_;
};

// Executes one instance: default plan first (untimed unless preexecuted),
// then the remaining plans in ascending historical latency. The first repeat
// of each plan runs against the default-anchored timeout; later repeats run
// against the tightened one.
std::vector<ExecutionRecord> collect_instance(
    const QueryInstance& instance, int64_t instance_index,
    const std::vector<const PlanTree*>& plans, const PlanFingerprint& default_fp,
    const simdb::OptimizerInterface& executor, const CollectionPolicy& policy,
    LatencyHistory& history, const ExecutionRecord* preexecuted_default = nullptr);

// Greedy set cover over the bootstrap prefix: a plan covers an instance when
// an uncensored record sits within (1+eps) of the instance's fastest seen.
PlanCover compute_plan_cover(const std::vector<ExecutionRecord>& records,
                             const std::vector<int64_t>& bootstrap_instances,
                             const std::vector<PlanFingerprint>& candidate_plans,
                             double epsilon, double delta);

struct CollectReport {
  size_t instances = 0;
  size_t bootstrap_count = 0;
  bool reordered = false;
  size_t plan_executions = 0;  // (instance, plan) pairs executed
  size_t total_runs = 0;       // repeats started, censored cuts included
  size_t censored_records = 0;
  size_t runs_saved_by_censoring = 0;  // repeats skipped after a cut
  size_t cover_size = 0;
  double coverage = 0.0;
};

std::pair<ExecutionDataset, PlanCover> collect_training_data(
    const Workload& w, const rce::CandidateSet& candidates,
    const simdb::OptimizerInterface& executor, const CollectionPolicy& policy,
    const Provenance& provenance, CollectReport* report = nullptr);

void save_report(const CollectReport& report, const std::string& path);

}  // namespace pqo::collect
