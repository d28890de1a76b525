#include "pqo/learn/labels.hpp"

#include <algorithm>
#include <cmath>

#include "pqo/core/error.hpp"

namespace pqo::learn {

std::vector<bool> label_near_optimal(const std::vector<double>& plan_latencies,
                                     double default_latency, double optimal_latency,
                                     double tau) {
  require(tau > 0.0, "tau must be > 0");
  std::vector<bool> labels(plan_latencies.size(), false);
  const bool degenerate = default_latency <= optimal_latency;
  for (size_t p = 0; p < plan_latencies.size(); ++p) {
    const double lp = plan_latencies[p];
    if (degenerate) {
      labels[p] = lp <= optimal_latency * (1.0 + tau);
    } else {
      labels[p] =
          (default_latency - lp) * (1.0 + tau) >= default_latency - optimal_latency;
    }
  }
  if (std::none_of(labels.begin(), labels.end(), [](bool b) { return b; }) &&
      !plan_latencies.empty()) {
    const auto argmin = std::min_element(plan_latencies.begin(), plan_latencies.end());
    labels[static_cast<size_t>(argmin - plan_latencies.begin())] = true;
  }
  return labels;
}

double example_weight(double default_latency, double plan_latency, bool positive,
                      bool regression, double C, double D) {
  require(C >= 1.0, "C must be >= 1");
  require(D >= 0.0, "D must be >= 0");
  if (regression) return C;
  if (positive) return 1.0 + D * std::log(std::max(default_latency - plan_latency, 1.0));
  return 1.0;
}

void LabelMatrix::validate() const {
  require(labels.rows() == static_cast<Eigen::Index>(plans.size()), "label row mismatch");
  require(labels.cols() == static_cast<Eigen::Index>(instances.size()),
          "label column mismatch");
  require(weights.rows() == labels.rows() && weights.cols() == labels.cols(),
          "weight shape mismatch");
  for (Eigen::Index j = 0; j < labels.cols(); ++j) {
    require(labels.col(j).maxCoeff() > 0.5,
            "instance " + std::to_string(instances[static_cast<size_t>(j)]) +
                " has no positive label");
  }
  require(weights.minCoeff() > 0.0, "weights must be positive");
}

LabelMatrix build_label_matrix(const ExecutionDataset& dataset,
                               const std::vector<PlanFingerprint>& cover,
                               const std::vector<size_t>& train_ids, double tau, double C,
                               double D) {
  require(!cover.empty(), "plan cover must be non-empty");
  require(!train_ids.empty(), "no training instances");

  const auto index = dataset.record_index();

  LabelMatrix m;
  m.plans = cover;
  const Eigen::Index n_plans = static_cast<Eigen::Index>(cover.size());
  m.labels = Eigen::MatrixXd::Zero(n_plans, static_cast<Eigen::Index>(train_ids.size()));
  m.weights = Eigen::MatrixXd::Ones(n_plans, static_cast<Eigen::Index>(train_ids.size()));

  for (size_t col = 0; col < train_ids.size(); ++col) {
    const int64_t instance = static_cast<int64_t>(train_ids[col]);
    const auto* default_record =
        [&]() -> const ExecutionRecord* {
      auto it = index.find({instance, dataset.default_plans[static_cast<size_t>(instance)]});
      return it == index.end() ? nullptr : it->second;
    }();
    require(default_record != nullptr,
            "instance " + std::to_string(instance) + " has no default record");
    const double l_default = estimated_latency(*default_record);

    std::vector<double> latencies(cover.size());
    std::vector<bool> censored(cover.size());
    double optimal = std::numeric_limits<double>::max();
    bool any_uncensored = false;
    for (size_t p = 0; p < cover.size(); ++p) {
      auto it = index.find({instance, cover[p]});
      require(it != index.end(), "instance " + std::to_string(instance) +
                                     " is missing a record for cover plan " +
                                     cover[p].to_hex());
      latencies[p] = estimated_latency(*it->second);
      censored[p] = it->second->censored;
      if (!censored[p]) {
        any_uncensored = true;
        optimal = std::min(optimal, latencies[p]);
      }
    }

    std::vector<bool> labels;
    if (any_uncensored) {
      labels = label_near_optimal(latencies, l_default, optimal, tau);
      for (size_t p = 0; p < cover.size(); ++p)
        if (censored[p]) labels[p] = false;  // lower bounds never certify near-optimal
      if (std::none_of(labels.begin(), labels.end(), [](bool b) { return b; })) {
        size_t argmin = 0;
        for (size_t p = 1; p < cover.size(); ++p)
          if (latencies[p] < latencies[argmin]) argmin = p;
        labels[argmin] = true;
      }
    } else {
      // every cover record censored: degenerate instance, force the argmin
      labels.assign(cover.size(), false);
      size_t argmin = 0;
      for (size_t p = 1; p < cover.size(); ++p)
        if (latencies[p] < latencies[argmin]) argmin = p;
      labels[argmin] = true;
    }

    for (size_t p = 0; p < cover.size(); ++p) {
      const bool regression = censored[p] || latencies[p] > l_default;
      const bool positive = labels[p];
      m.labels(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(col)) =
          positive ? 1.0 : 0.0;
      m.weights(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(col)) =
          example_weight(l_default, latencies[p], positive, regression && !positive, C, D);
    }
    m.instances.push_back(instance);
  }
  m.validate();
  return m;
}

}  // namespace pqo::learn
