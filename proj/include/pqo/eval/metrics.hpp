#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pqo/core/dataset.hpp"
#include "pqo/rce/rce.hpp"
#include "pqo/simdb/executor.hpp"

namespace pqo::eval {

// A model's decision for one instance; empty means fall back to the default.
using Choice = std::optional<PlanFingerprint>;

// Sum of default latencies over the sum of per-instance minima within
// plan_set. Censored records evaluate at their timeout, which can never win
// the minimum under the collection policy.
double oracle_speedup(const ExecutionDataset& dataset,
                      const std::vector<PlanFingerprint>& plan_set,
                      const std::vector<int64_t>& instances);

double model_speedup(const ExecutionDataset& dataset,
                     const std::map<int64_t, Choice>& choices,
                     const std::vector<int64_t>& instances);

// Nearest-rank upper percentile: index floor(0.99 n) + 1 (1-based).
double percentile_99(std::vector<double> values);

double tail_speedup_p99(const ExecutionDataset& dataset,
                        const std::map<int64_t, Choice>& choices,
                        const std::vector<int64_t>& instances);

// Fraction of instances whose chosen latency exceeds (1 + threshold) x
// default; fallbacks never count.
double regression_frequency(const ExecutionDataset& dataset,
                            const std::map<int64_t, Choice>& choices,
                            const std::vector<int64_t>& instances,
                            double threshold = 0.10);

// (sum of per-instance oracle minima) / (min over fixed plans of that plan's
// total), over instances with a record for every plan in plan_set.
double single_best_plan_ratio(const ExecutionDataset& dataset,
                              const std::vector<PlanFingerprint>& plan_set,
                              const std::vector<int64_t>& instances);

double geometric_mean(const std::vector<double>& values);

struct MetricsReport {
  double s_opt = 1.0;
  double s_model = 1.0;
  double capture_fraction = 1.0;  // p = s_model / s_opt
  double p99_speedup = 1.0;
  double regression_frequency = 0.0;
  double fallback_fraction = 0.0;
  size_t plan_cover_size = 0;
  double single_best_plan_ratio = 1.0;
  size_t instances = 0;

  struct InstanceRow {
    int64_t instance = 0;
    double default_ms = 0.0;
    double chosen_ms = 0.0;
    bool fallback = false;
  };
  std::vector<InstanceRow> per_instance;  // improvement/regression magnitudes
};

MetricsReport evaluate(const ExecutionDataset& dataset,
                       const std::vector<PlanFingerprint>& plan_set,
                       const std::map<int64_t, Choice>& choices,
                       const std::vector<int64_t>& instances,
                       double regression_threshold = 0.10);

void save_metrics(const MetricsReport& report, const std::string& json_path,
                  const std::string& text_path, const std::string& csv_path = "");
std::string metrics_to_text(const MetricsReport& report);

// True-latency comparison per template: the per-instance best RCE plan vs the
// exact-cardinality plan vs the default, averaged over the workload. Needs
// the simulator's truth oracle.
struct ExactCardinalityRow {
  std::string template_id;
  double best_rce_ms = 0.0;
  double exact_cardinality_ms = 0.0;
  double default_ms = 0.0;
};

ExactCardinalityRow exact_cardinality_comparison(const simdb::SimulatedOptimizer& optimizer,
                                                 const Workload& workload,
                                                 const rce::CandidateSet& candidates);

}  // namespace pqo::eval
