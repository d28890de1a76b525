#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace pqo::learn {

struct NetConfig {
  int numeric_inputs = 0;
  std::vector<int> embedding_buckets;  // per string slot
  int embedding_dim = 10;
  int hidden_units = 64;
  int rff_features = 128;
  double rff_lengthscale = 1.25;
  int heads = 1;
  double spectral_bound = 0.6;

  int input_dim() const {
    return numeric_inputs + embedding_dim * static_cast<int>(embedding_buckets.size());
  }
};

struct FeatureBatch {
  Eigen::MatrixXd numeric;                       // numeric_inputs x B
  std::vector<std::vector<int>> string_indices;  // per slot, length B
  Eigen::MatrixXd labels;                        // heads x B
  Eigen::MatrixXd weights;                       // heads x B

  Eigen::Index size() const { return numeric.cols(); }
  FeatureBatch columns(const std::vector<Eigen::Index>& idx) const;
};

struct NetGrads {
  std::vector<Eigen::MatrixXd> embeddings;
  Eigen::MatrixXd win, w1, w2, w3;
  Eigen::VectorXd bin, b1, b2, b3;
  Eigen::MatrixXd beta;
};

// Shared-representation network with one sigmoid head per plan: a linear
// input projection, three residual ReLU blocks of hidden_units each, a fixed
// random-Fourier-feature projection, and a Laplace-approximated posterior
// over the head weights. Spectral normalization with a bound below one keeps
// every block bi-Lipschitz, which is what makes the GP variance distance
// aware.
class SngpNet {
 public:
  SngpNet() = default;
  SngpNet(NetConfig cfg, uint64_t seed);

  double loss(const FeatureBatch& batch, NetGrads* grads) const;

  Eigen::MatrixXd representation(const FeatureBatch& batch) const;  // rff x B
  Eigen::MatrixXd logits(const FeatureBatch& batch) const;          // heads x B

  void adam_step(const NetGrads& grads, double learning_rate);

  // One power iteration per dense layer; rescales any layer whose estimated
  // top singular value exceeds the bound. Returns the largest estimate seen
  // relative to the bound (pre-rescale).
  double spectral_normalize();

  // Accurate top singular value estimates (extra power iterations).
  std::vector<double> spectral_norms(int iterations = 30) const;

  void fit_posterior(const FeatureBatch& train, double ridge, double weight_floor = 0.0);
  Eigen::VectorXd predictive_variance(const FeatureBatch& batch) const;  // per column

  NetConfig config;
  std::vector<Eigen::MatrixXd> embeddings;  // buckets x embedding_dim
  Eigen::MatrixXd win, w1, w2, w3;
  Eigen::VectorXd bin, b1, b2, b3;
  Eigen::MatrixXd rff_w;          // rff x hidden, fixed
  Eigen::VectorXd rff_b;          // rff, fixed
  Eigen::MatrixXd beta;           // rff x heads
  Eigen::MatrixXd gp_covariance;  // rff x rff, after fit_posterior

 private:
  struct Cache;
  void forward(const FeatureBatch& batch, Cache& cache) const;
  Eigen::MatrixXd gather_inputs(const FeatureBatch& batch) const;

  // power-iteration state
  Eigen::VectorXd uin_, u1_, u2_, u3_;
  // Adam state
  int64_t adam_t_ = 0;
  NetGrads adam_m_, adam_v_;
  bool adam_ready_ = false;
};

}  // namespace pqo::learn
