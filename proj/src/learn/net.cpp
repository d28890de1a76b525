#include "pqo/learn/net.hpp"

#include <cmath>

#include "pqo/core/error.hpp"
#include "pqo/core/rng.hpp"

namespace pqo::learn {

namespace {

constexpr double kPi = 3.14159265358979323846;

Eigen::MatrixXd seeded_normal(Eigen::Index rows, Eigen::Index cols, double scale, Rng& rng) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
  return m;
}

double stable_bce(double z, double y) {
  // max(z,0) - z*y + log(1 + exp(-|z|))
  return std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
}

}  // namespace

FeatureBatch FeatureBatch::columns(const std::vector<Eigen::Index>& idx) const {
  FeatureBatch out;
  out.numeric.resize(numeric.rows(), static_cast<Eigen::Index>(idx.size()));
  for (size_t k = 0; k < idx.size(); ++k)
    out.numeric.col(static_cast<Eigen::Index>(k)) = numeric.col(idx[k]);
  out.string_indices.resize(string_indices.size());
  for (size_t s = 0; s < string_indices.size(); ++s)
    for (Eigen::Index i : idx)
      out.string_indices[s].push_back(string_indices[s][static_cast<size_t>(i)]);
  auto take = [&](const Eigen::MatrixXd& m) {
    Eigen::MatrixXd r(m.rows(), static_cast<Eigen::Index>(idx.size()));
    for (size_t k = 0; k < idx.size(); ++k) r.col(static_cast<Eigen::Index>(k)) = m.col(idx[k]);
    return r;
  };
  if (labels.size() > 0) out.labels = take(labels);
  if (weights.size() > 0) out.weights = take(weights);
  return out;
}

SngpNet::SngpNet(NetConfig cfg, uint64_t seed) : config(cfg) {
  require(cfg.hidden_units >= 1 && cfg.rff_features >= 1 && cfg.heads >= 1,
          "bad network dimensions");
  require(cfg.spectral_bound > 0.0, "spectral bound must be > 0");
  Rng rng(hash_combine(seed, fnv1a64("sngp_init")));

  const int f = cfg.input_dim();
  const int h = cfg.hidden_units;
  const int d = cfg.rff_features;

  // small embeddings keep string islands mutually close in kernel space
  for (int buckets : cfg.embedding_buckets)
    embeddings.push_back(seeded_normal(buckets, cfg.embedding_dim, 0.05, rng));

  // residual trunk: win projects the input, w1..w3 are the block weights
  win = seeded_normal(h, f, std::sqrt(1.0 / f), rng);
  w1 = seeded_normal(h, h, std::sqrt(2.0 / h), rng);
  w2 = seeded_normal(h, h, std::sqrt(2.0 / h), rng);
  w3 = seeded_normal(h, h, std::sqrt(2.0 / h), rng);
  bin = Eigen::VectorXd::Zero(h);
  b1 = Eigen::VectorXd::Zero(h);
  b2 = Eigen::VectorXd::Zero(h);
  b3 = Eigen::VectorXd::Zero(h);

  rff_w = seeded_normal(d, h, 1.0 / cfg.rff_lengthscale, rng);
  rff_b.resize(d);
  for (int i = 0; i < d; ++i) rff_b(i) = rng.uniform(0.0, 2.0 * kPi);

  beta = Eigen::MatrixXd::Zero(d, cfg.heads);
  gp_covariance = Eigen::MatrixXd::Identity(d, d);

  uin_ = seeded_normal(h, 1, 1.0, rng).col(0).normalized();
  u1_ = seeded_normal(h, 1, 1.0, rng).col(0).normalized();
  u2_ = seeded_normal(h, 1, 1.0, rng).col(0).normalized();
  u3_ = seeded_normal(h, 1, 1.0, rng).col(0).normalized();

  // settle the power-iteration state and bring init weights under the bound
  for (int i = 0; i < 30; ++i) spectral_normalize();
}

Eigen::MatrixXd SngpNet::gather_inputs(const FeatureBatch& batch) const {
  require(batch.string_indices.size() == embeddings.size(), "string slot count mismatch");
  const Eigen::Index b = batch.size();
  Eigen::MatrixXd x(config.input_dim(), b);
  x.topRows(batch.numeric.rows()) = batch.numeric;
  Eigen::Index offset = batch.numeric.rows();
  for (size_t s = 0; s < embeddings.size(); ++s) {
    for (Eigen::Index col = 0; col < b; ++col) {
      const int idx = batch.string_indices[s][static_cast<size_t>(col)];
      x.block(offset, col, config.embedding_dim, 1) = embeddings[s].row(idx).transpose();
    }
    offset += config.embedding_dim;
  }
  return x;
}

struct SngpNet::Cache {
  Eigen::MatrixXd x, h0, a1, h1, a2, h2, a3, h3, c, phi, z;
};

void SngpNet::forward(const FeatureBatch& batch, Cache& cache) const {
  cache.x = gather_inputs(batch);
  cache.h0 = (win * cache.x).colwise() + bin;
  cache.a1 = (w1 * cache.h0).colwise() + b1;
  cache.h1 = cache.h0 + cache.a1.cwiseMax(0.0);
  cache.a2 = (w2 * cache.h1).colwise() + b2;
  cache.h2 = cache.h1 + cache.a2.cwiseMax(0.0);
  cache.a3 = (w3 * cache.h2).colwise() + b3;
  cache.h3 = cache.h2 + cache.a3.cwiseMax(0.0);
  cache.c = (rff_w * cache.h3).colwise() + rff_b;
  cache.phi = std::sqrt(2.0 / config.rff_features) * cache.c.array().cos().matrix();
  cache.z = beta.transpose() * cache.phi;
}

Eigen::MatrixXd SngpNet::representation(const FeatureBatch& batch) const {
  Cache cache;
  forward(batch, cache);
  return cache.phi;
}

Eigen::MatrixXd SngpNet::logits(const FeatureBatch& batch) const {
  Cache cache;
  forward(batch, cache);
  return cache.z;
}

double SngpNet::loss(const FeatureBatch& batch, NetGrads* grads) const {
  require(batch.labels.rows() == beta.cols(), "label head mismatch");
  Cache cache;
  forward(batch, cache);
  const Eigen::Index b = batch.size();
  const double inv_b = 1.0 / static_cast<double>(b);

  double total = 0.0;
  for (Eigen::Index p = 0; p < cache.z.rows(); ++p)
    for (Eigen::Index col = 0; col < b; ++col)
      total += batch.weights(p, col) * stable_bce(cache.z(p, col), batch.labels(p, col));
  total *= inv_b;

  if (!grads) return total;

  const Eigen::MatrixXd sig =
      cache.z.unaryExpr([](double z) { return 1.0 / (1.0 + std::exp(-z)); });
  const Eigen::MatrixXd dz =
      inv_b * (batch.weights.array() * (sig - batch.labels).array()).matrix();

  grads->beta = cache.phi * dz.transpose();
  const Eigen::MatrixXd dphi = beta * dz;
  const Eigen::MatrixXd dc = -std::sqrt(2.0 / config.rff_features) *
                             (cache.c.array().sin() * dphi.array()).matrix();
  const Eigen::MatrixXd dh3 = rff_w.transpose() * dc;

  const Eigen::MatrixXd da3 =
      (dh3.array() * (cache.a3.array() > 0.0).cast<double>()).matrix();
  grads->w3 = da3 * cache.h2.transpose();
  grads->b3 = da3.rowwise().sum();
  const Eigen::MatrixXd dh2 = dh3 + w3.transpose() * da3;

  const Eigen::MatrixXd da2 =
      (dh2.array() * (cache.a2.array() > 0.0).cast<double>()).matrix();
  grads->w2 = da2 * cache.h1.transpose();
  grads->b2 = da2.rowwise().sum();
  const Eigen::MatrixXd dh1 = dh2 + w2.transpose() * da2;

  const Eigen::MatrixXd da1 =
      (dh1.array() * (cache.a1.array() > 0.0).cast<double>()).matrix();
  grads->w1 = da1 * cache.h0.transpose();
  grads->b1 = da1.rowwise().sum();
  const Eigen::MatrixXd dh0 = dh1 + w1.transpose() * da1;

  grads->win = dh0 * cache.x.transpose();
  grads->bin = dh0.rowwise().sum();

  const Eigen::MatrixXd dx = win.transpose() * dh0;
  grads->embeddings.clear();
  Eigen::Index offset = batch.numeric.rows();
  for (size_t s = 0; s < embeddings.size(); ++s) {
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(embeddings[s].rows(), embeddings[s].cols());
    for (Eigen::Index col = 0; col < b; ++col) {
      const int idx = batch.string_indices[s][static_cast<size_t>(col)];
      g.row(idx) += dx.block(offset, col, config.embedding_dim, 1).transpose();
    }
    grads->embeddings.push_back(std::move(g));
    offset += config.embedding_dim;
  }
  return total;
}

void SngpNet::adam_step(const NetGrads& grads, double learning_rate) {
  constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
  if (!adam_ready_) {
    auto zeros_like_m = [](const Eigen::MatrixXd& m) {
      return Eigen::MatrixXd::Zero(m.rows(), m.cols());
    };
    auto zeros_like_v = [](const Eigen::VectorXd& v) {
      return Eigen::VectorXd::Zero(v.size());
    };
    for (const auto& e : embeddings) {
      adam_m_.embeddings.push_back(zeros_like_m(e));
      adam_v_.embeddings.push_back(zeros_like_m(e));
    }
    adam_m_.win = zeros_like_m(win);
    adam_v_.win = zeros_like_m(win);
    adam_m_.w1 = zeros_like_m(w1);
    adam_v_.w1 = zeros_like_m(w1);
    adam_m_.w2 = zeros_like_m(w2);
    adam_v_.w2 = zeros_like_m(w2);
    adam_m_.w3 = zeros_like_m(w3);
    adam_v_.w3 = zeros_like_m(w3);
    adam_m_.bin = zeros_like_v(bin);
    adam_v_.bin = zeros_like_v(bin);
    adam_m_.b1 = zeros_like_v(b1);
    adam_v_.b1 = zeros_like_v(b1);
    adam_m_.b2 = zeros_like_v(b2);
    adam_v_.b2 = zeros_like_v(b2);
    adam_m_.b3 = zeros_like_v(b3);
    adam_v_.b3 = zeros_like_v(b3);
    adam_m_.beta = zeros_like_m(beta);
    adam_v_.beta = zeros_like_m(beta);
    adam_ready_ = true;
  }
  ++adam_t_;
  const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(adam_t_));
  const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(adam_t_));

  auto update = [&](Eigen::MatrixXd& param, Eigen::MatrixXd& m, Eigen::MatrixXd& v,
                    const Eigen::MatrixXd& g) {
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
    param.array() -= learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
  };
  auto update_vec = [&](Eigen::VectorXd& param, Eigen::VectorXd& m, Eigen::VectorXd& v,
                        const Eigen::VectorXd& g) {
    m = beta1 * m + (1.0 - beta1) * g;
    v = beta2 * v + (1.0 - beta2) * g.cwiseProduct(g);
    param.array() -= learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
  };

  for (size_t s = 0; s < embeddings.size(); ++s)
    update(embeddings[s], adam_m_.embeddings[s], adam_v_.embeddings[s], grads.embeddings[s]);
  update(win, adam_m_.win, adam_v_.win, grads.win);
  update(w1, adam_m_.w1, adam_v_.w1, grads.w1);
  update(w2, adam_m_.w2, adam_v_.w2, grads.w2);
  update(w3, adam_m_.w3, adam_v_.w3, grads.w3);
  update_vec(bin, adam_m_.bin, adam_v_.bin, grads.bin);
  update_vec(b1, adam_m_.b1, adam_v_.b1, grads.b1);
  update_vec(b2, adam_m_.b2, adam_v_.b2, grads.b2);
  update_vec(b3, adam_m_.b3, adam_v_.b3, grads.b3);
  update(beta, adam_m_.beta, adam_v_.beta, grads.beta);
}

double SngpNet::spectral_normalize() {
  double max_ratio = 0.0;
  auto normalize = [&](Eigen::MatrixXd& w, Eigen::VectorXd& u) {
    // rescale until the settled estimate respects the bound
    double sigma = 0.0;
    for (int pass = 0; pass < 8; ++pass) {
      for (int it = 0; it < 3; ++it) {
        Eigen::VectorXd v = (w.transpose() * u).normalized();
        u = (w * v).normalized();
        sigma = u.dot(w * v);
      }
      if (sigma <= config.spectral_bound * 1.004) break;
      w *= config.spectral_bound / sigma;
    }
    max_ratio = std::max(max_ratio, sigma / config.spectral_bound);
  };
  normalize(win, uin_);
  normalize(w1, u1_);
  normalize(w2, u2_);
  normalize(w3, u3_);
  return max_ratio;
}

std::vector<double> SngpNet::spectral_norms(int iterations) const {
  auto estimate = [&](const Eigen::MatrixXd& w) {
    Eigen::VectorXd u = Eigen::VectorXd::Ones(w.rows()).normalized();
    for (int i = 0; i < iterations; ++i) {
      Eigen::VectorXd v = (w.transpose() * u).normalized();
      u = (w * v).normalized();
    }
    Eigen::VectorXd v = (w.transpose() * u).normalized();
    return u.dot(w * v);
  };
  return {estimate(win), estimate(w1), estimate(w2), estimate(w3)};
}

void SngpNet::fit_posterior(const FeatureBatch& train, double ridge, double weight_floor) {
  require(ridge > 0.0, "GP ridge must be > 0");
  require(weight_floor >= 0.0 && weight_floor <= 0.25, "weight floor must be in [0, 0.25]");
  Cache cache;
  forward(train, cache);
  const Eigen::Index d = config.rff_features;
  Eigen::MatrixXd precision = ridge * Eigen::MatrixXd::Identity(d, d);
  const Eigen::MatrixXd sig =
      cache.z.unaryExpr([](double z) { return 1.0 / (1.0 + std::exp(-z)); });
  for (Eigen::Index col = 0; col < train.size(); ++col) {
    double w = 0.0;
    for (Eigen::Index p = 0; p < sig.rows(); ++p) w += sig(p, col) * (1.0 - sig(p, col));
    w /= static_cast<double>(sig.rows());
    w = std::max(w, weight_floor);
    precision.noalias() += w * cache.phi.col(col) * cache.phi.col(col).transpose();
  }
  gp_covariance = precision.ldlt().solve(Eigen::MatrixXd::Identity(d, d));
}

Eigen::VectorXd SngpNet::predictive_variance(const FeatureBatch& batch) const {
  Cache cache;
  forward(batch, cache);
  Eigen::VectorXd out(batch.size());
  for (Eigen::Index col = 0; col < batch.size(); ++col)
    out(col) = cache.phi.col(col).dot(gp_covariance * cache.phi.col(col));
  return out;
}

}  // namespace pqo::learn
