#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "pqo/core/dataset.hpp"

namespace pqo::learn {

// Near-optimality: (l_d - l_p)(1 + tau) >= l_d - l_o. When the default beats
// the whole cover (l_d <= l_o) the inequality degenerates; a plan is then
// positive iff l_p <= l_o (1 + tau).
std::vector<bool> label_near_optimal(const std::vector<double>& plan_latencies,
                                     double default_latency, double optimal_latency,
                                     double tau);

// Regressions carry weight C; positives 1 + D ln(max(l_d - l_p, 1)); rest 1.
double example_weight(double default_latency, double plan_latency, bool positive,
                      bool regression, double C, double D);

struct LabelMatrix {
  std::vector<PlanFingerprint> plans;  // head order
  std::vector<int64_t> instances;
  Eigen::MatrixXd labels;   // plans x instances, 0/1
  Eigen::MatrixXd weights;  // plans x instances, > 0

  void validate() const;
};

// One column per train instance over the plan cover. Censored records are
// treated as worse-than-default: never positive, weighted C. Instances whose
// cover records are all censored fall back to a forced positive on the
// latency argmin.
LabelMatrix build_label_matrix(const ExecutionDataset& dataset,
                               const std::vector<PlanFingerprint>& cover,
                               const std::vector<size_t>& train_ids, double tau, double C,
                               double D);

}  // namespace pqo::learn
