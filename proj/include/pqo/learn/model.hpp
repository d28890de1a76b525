#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pqo/core/dataset.hpp"
#include "pqo/learn/featurizer.hpp"
#include "pqo/learn/labels.hpp"
#include "pqo/learn/net.hpp"

namespace pqo::learn {

struct ModelConfig {
  int hidden_units = 64;
  int embedding_dim = 10;
  int vocab_size = 50;
  int oov_buckets = 1;
  int rff_features = 128;
  double rff_lengthscale = 1.25;
  double gp_ridge = 1e-3;
  double gp_weight_floor = 0.25;  // Laplace weight floor, small-sample stability
  double spectral_bound = 0.6;
  double learning_rate = 3e-4;
  int epochs = 400;
  int batch_size = 32;
  double tau = 0.05;
  double regression_weight = 5.0;   // C
  double improvement_weight = 0.5;  // D
  double confidence_threshold = 0.9;
  FeatureMode feature_mode = FeatureMode::RawParams;

  void validate() const;
};

struct PlanChoice {
  std::optional<PlanFingerprint> plan;  // empty means fall back to the optimizer
  double confidence = 0.0;

  bool is_fallback() const { return !plan.has_value(); }
};

struct ModelArtifact {
  std::string template_id;
  ModelConfig config;
  FeaturizerState featurizer;
  std::vector<PlanFingerprint> cover;  // head order
  SngpNet net;
  uint64_t seed = 0;
  std::string config_digest;

  // training diagnostics
  double initial_loss = 0.0;
  double final_loss = 0.0;
  double max_spectral_ratio = 0.0;  // per-step estimate / bound, max over steps
};

struct TrainInputs {
  const ExecutionDataset* dataset = nullptr;
  const Workload* workload = nullptr;
  const QueryTemplate* tmpl = nullptr;
  std::vector<PlanFingerprint> cover;
  std::vector<size_t> train_ids;
  const simdb::Schema* schema = nullptr;  // selectivity mode only
};

ModelArtifact train_model(const TrainInputs& inputs, const ModelConfig& config,
                          uint64_t seed);

// Forward pass + GP variance; confidence is the mean-field adjusted sigmoid
// sigma(z / sqrt(1 + (pi/8) var)). Falls back when below the threshold.
PlanChoice predict(const ModelArtifact& model, const QueryTemplate& tmpl,
                   const QueryInstance& instance, const simdb::Schema* schema = nullptr);

// Per-head adjusted probabilities plus the shared predictive variance.
std::pair<Eigen::VectorXd, double> predict_confidences(const ModelArtifact& model,
                                                       const QueryTemplate& tmpl,
                                                       const QueryInstance& instance,
                                                       const simdb::Schema* schema = nullptr);

FeatureBatch make_feature_batch(const FeaturizerState& featurizer, const QueryTemplate& tmpl,
                                const Workload& workload, const std::vector<size_t>& ids,
                                const simdb::Schema* schema = nullptr);

void save_model(const ModelArtifact& model, const std::string& path);
ModelArtifact load_model(const std::string& path);

}  // namespace pqo::learn
