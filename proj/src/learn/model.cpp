#include "pqo/learn/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "pqo/core/error.hpp"
#include "pqo/core/json_io.hpp"
#include "pqo/core/rng.hpp"

namespace pqo::learn {

namespace {

constexpr double kMeanFieldLambda = 3.14159265358979323846 / 8.0;

}  // namespace

void ModelConfig::validate() const {
  require(hidden_units >= 1, "hidden units must be >= 1");
  require(embedding_dim >= 1, "embedding dim must be >= 1");
  require(vocab_size >= 1, "vocab size must be >= 1");
  require(oov_buckets >= 1, "OOV buckets must be >= 1");
  require(rff_features >= 1, "rff features must be >= 1");
  require(rff_lengthscale > 0.0, "rff lengthscale must be > 0");
  require(gp_ridge > 0.0, "gp ridge must be > 0");
  require(gp_weight_floor >= 0.0 && gp_weight_floor <= 0.25,
          "gp weight floor must be in [0, 0.25]");
  require(spectral_bound > 0.0, "spectral bound must be > 0");
  require(learning_rate > 0.0, "learning rate must be > 0");
  require(epochs >= 1, "epochs must be >= 1");
  require(batch_size >= 1, "batch size must be >= 1");
  require(tau > 0.0, "tau must be > 0");
  require(regression_weight >= 1.0, "C must be >= 1");
  require(improvement_weight >= 0.0, "D must be >= 0");
  require(confidence_threshold >= 0.0 && confidence_threshold <= 1.0,
          "confidence threshold must be in [0, 1]");
}

FeatureBatch make_feature_batch(const FeaturizerState& featurizer, const QueryTemplate& tmpl,
                                const Workload& workload, const std::vector<size_t>& ids,
                                const simdb::Schema* schema) {
  FeatureBatch batch;
  batch.numeric.resize(static_cast<Eigen::Index>(featurizer.numeric_dim()),
                       static_cast<Eigen::Index>(ids.size()));
  batch.string_indices.resize(featurizer.string_dim());
  for (size_t k = 0; k < ids.size(); ++k) {
    const auto f = featurizer.transform(tmpl, workload.instances[ids[k]], schema);
    for (size_t i = 0; i < f.numeric.size(); ++i)
      batch.numeric(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = f.numeric[i];
    for (size_t s = 0; s < f.string_indices.size(); ++s)
      batch.string_indices[s].push_back(f.string_indices[s]);
  }
  return batch;
}

ModelArtifact train_model(const TrainInputs& inputs, const ModelConfig& config,
                          uint64_t seed) {
  config.validate();
  require(inputs.dataset && inputs.workload && inputs.tmpl, "missing training inputs");
  require(!inputs.cover.empty(), "plan cover must be non-empty");
  require(!inputs.train_ids.empty(), "no training instances");

  ModelArtifact model;
  model.template_id = inputs.tmpl->template_id;
  model.config = config;
  model.seed = seed;
  model.cover = inputs.cover;
  model.featurizer =
      fit_featurizer(*inputs.tmpl, *inputs.workload, inputs.train_ids, *inputs.dataset,
                     config.feature_mode, config.vocab_size, config.oov_buckets,
                     inputs.schema);

  const LabelMatrix labels =
      build_label_matrix(*inputs.dataset, inputs.cover, inputs.train_ids, config.tau,
                         config.regression_weight, config.improvement_weight);

  FeatureBatch data = make_feature_batch(model.featurizer, *inputs.tmpl, *inputs.workload,
                                         inputs.train_ids, inputs.schema);
  data.labels = labels.labels;
  data.weights = labels.weights;

  NetConfig net_cfg;
  net_cfg.numeric_inputs = static_cast<int>(model.featurizer.numeric_dim());
  for (const auto& vocab : model.featurizer.vocabularies)
    net_cfg.embedding_buckets.push_back(vocab.bucket_count());
  net_cfg.embedding_dim = config.embedding_dim;
  net_cfg.hidden_units = config.hidden_units;
  net_cfg.rff_features = config.rff_features;
  net_cfg.rff_lengthscale = config.rff_lengthscale;
  net_cfg.heads = static_cast<int>(inputs.cover.size());
  net_cfg.spectral_bound = config.spectral_bound;

  model.net = SngpNet(net_cfg, seed);
  model.initial_loss = model.net.loss(data, nullptr);

  const Eigen::Index n = data.size();
  std::vector<Eigen::Index> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);

  double max_ratio = 0.0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.batch_size < n) {
      Rng rng(hash_combine(seed, hash_combine(fnv1a64("epoch"),
                                              static_cast<uint64_t>(epoch))));
      rng.shuffle(order);
    }
    for (Eigen::Index start = 0; start < n; start += config.batch_size) {
      const Eigen::Index stop = std::min<Eigen::Index>(start + config.batch_size, n);
      std::vector<Eigen::Index> ids(order.begin() + start, order.begin() + stop);
      FeatureBatch batch = data.columns(ids);
      NetGrads grads;
      model.net.loss(batch, &grads);
      model.net.adam_step(grads, config.learning_rate);
      max_ratio = std::max(max_ratio, model.net.spectral_normalize());
    }
  }
  model.max_spectral_ratio = max_ratio;
  model.final_loss = model.net.loss(data, nullptr);

  model.net.fit_posterior(data, config.gp_ridge, config.gp_weight_floor);
  return model;
}

std::pair<Eigen::VectorXd, double> predict_confidences(const ModelArtifact& model,
                                                       const QueryTemplate& tmpl,
                                                       const QueryInstance& instance,
                                                       const simdb::Schema* schema) {
  Workload lone;
  lone.template_id = instance.template_id;
  lone.instances = {instance};
  FeatureBatch batch = make_feature_batch(model.featurizer, tmpl, lone, {0}, schema);
  const Eigen::MatrixXd z = model.net.logits(batch);
  const double variance = model.net.predictive_variance(batch)(0);
  const double shrink = std::sqrt(1.0 + kMeanFieldLambda * variance);
  Eigen::VectorXd conf(z.rows());
  for (Eigen::Index p = 0; p < z.rows(); ++p)
    conf(p) = 1.0 / (1.0 + std::exp(-z(p, 0) / shrink));
  return {conf, variance};
}

PlanChoice predict(const ModelArtifact& model, const QueryTemplate& tmpl,
                   const QueryInstance& instance, const simdb::Schema* schema) {
  const auto [conf, variance] = predict_confidences(model, tmpl, instance, schema);
  (void)variance;
  Eigen::Index best = 0;
  conf.maxCoeff(&best);
  PlanChoice choice;
  choice.confidence = conf(best);
  if (choice.confidence >= model.config.confidence_threshold)
    choice.plan = model.cover[static_cast<size_t>(best)];
  return choice;
}

namespace {

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json data = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  const Eigen::Index rows = j.at("rows").get<Eigen::Index>();
  const Eigen::Index cols = j.at("cols").get<Eigen::Index>();
  const auto& data = j.at("data");
  require(static_cast<Eigen::Index>(data.size()) == rows * cols, "matrix size mismatch");
  Eigen::MatrixXd m(rows, cols);
  size_t k = 0;
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index jj = 0; jj < cols; ++jj) m(i, jj) = data[k++].get<double>();
  return m;
}

Json vector_to_json(const Eigen::VectorXd& v) {
  Json data = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) data.push_back(v(i));
  return data;
}

Eigen::VectorXd vector_from_json(const Json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j[static_cast<size_t>(i)].get<double>();
  return v;
}

Json config_to_json(const ModelConfig& c) {
  return Json{{"hidden_units", c.hidden_units},
              {"embedding_dim", c.embedding_dim},
              {"vocab_size", c.vocab_size},
              {"oov_buckets", c.oov_buckets},
              {"rff_features", c.rff_features},
              {"rff_lengthscale", c.rff_lengthscale},
              {"gp_ridge", c.gp_ridge},
              {"gp_weight_floor", c.gp_weight_floor},
              {"spectral_bound", c.spectral_bound},
              {"learning_rate", c.learning_rate},
              {"epochs", c.epochs},
              {"batch_size", c.batch_size},
              {"tau", c.tau},
              {"regression_weight", c.regression_weight},
              {"improvement_weight", c.improvement_weight},
              {"confidence_threshold", c.confidence_threshold},
              {"feature_mode", to_string(c.feature_mode)}};
}

ModelConfig config_from_json(const Json& j) {
  ModelConfig c;
  c.hidden_units = j.at("hidden_units").get<int>();
  c.embedding_dim = j.at("embedding_dim").get<int>();
  c.vocab_size = j.at("vocab_size").get<int>();
  c.oov_buckets = j.at("oov_buckets").get<int>();
  c.rff_features = j.at("rff_features").get<int>();
  c.rff_lengthscale = j.at("rff_lengthscale").get<double>();
  c.gp_ridge = j.at("gp_ridge").get<double>();
  c.gp_weight_floor = j.at("gp_weight_floor").get<double>();
  c.spectral_bound = j.at("spectral_bound").get<double>();
  c.learning_rate = j.at("learning_rate").get<double>();
  c.epochs = j.at("epochs").get<int>();
  c.batch_size = j.at("batch_size").get<int>();
  c.tau = j.at("tau").get<double>();
  c.regression_weight = j.at("regression_weight").get<double>();
  c.improvement_weight = j.at("improvement_weight").get<double>();
  c.confidence_threshold = j.at("confidence_threshold").get<double>();
  c.feature_mode = feature_mode_from_string(j.at("feature_mode").get<std::string>());
  c.validate();
  return c;
}

Json featurizer_to_json(const FeaturizerState& f) {
  Json numerics = Json::array();
  for (const auto& s : f.numerics)
    numerics.push_back({{"slot", s.param_slot}, {"mean", s.mean}, {"stddev", s.stddev}});
  Json vocabs = Json::array();
  for (const auto& v : f.vocabularies)
    vocabs.push_back(
        {{"slot", v.param_slot}, {"values", v.values}, {"oov_buckets", v.oov_buckets}});
  return Json{{"mode", to_string(f.mode)},
              {"numerics", std::move(numerics)},
              {"vocabularies", std::move(vocabs)}};
}

FeaturizerState featurizer_from_json(const Json& j) {
  FeaturizerState f;
  f.mode = feature_mode_from_string(j.at("mode").get<std::string>());
  for (const auto& s : j.at("numerics"))
    f.numerics.push_back(
        {s.at("slot").get<int>(), s.at("mean").get<double>(), s.at("stddev").get<double>()});
  for (const auto& v : j.at("vocabularies")) {
    Vocabulary vocab;
    vocab.param_slot = v.at("slot").get<int>();
    vocab.values = v.at("values").get<std::vector<std::string>>();
    vocab.oov_buckets = v.at("oov_buckets").get<int>();
    f.vocabularies.push_back(std::move(vocab));
  }
  return f;
}

}  // namespace

void save_model(const ModelArtifact& model, const std::string& path) {
  Json j;
  j["format_version"] = 1;
  j["kind"] = "model_artifact";
  j["template_id"] = model.template_id;
  j["config"] = config_to_json(model.config);
  j["featurizer"] = featurizer_to_json(model.featurizer);
  Json cover = Json::array();
  for (const auto& fp : model.cover) cover.push_back(fp.to_hex());
  j["cover"] = std::move(cover);
  j["seed"] = model.seed;
  j["config_digest"] = model.config_digest;
  j["initial_loss"] = model.initial_loss;
  j["final_loss"] = model.final_loss;
  j["max_spectral_ratio"] = model.max_spectral_ratio;

  const SngpNet& net = model.net;
  Json netj;
  netj["numeric_inputs"] = net.config.numeric_inputs;
  netj["embedding_buckets"] = net.config.embedding_buckets;
  netj["embedding_dim"] = net.config.embedding_dim;
  netj["hidden_units"] = net.config.hidden_units;
  netj["rff_features"] = net.config.rff_features;
  netj["rff_lengthscale"] = net.config.rff_lengthscale;
  netj["heads"] = net.config.heads;
  netj["spectral_bound"] = net.config.spectral_bound;
  Json embs = Json::array();
  for (const auto& e : net.embeddings) embs.push_back(matrix_to_json(e));
  netj["embeddings"] = std::move(embs);
  netj["win"] = matrix_to_json(net.win);
  netj["w1"] = matrix_to_json(net.w1);
  netj["w2"] = matrix_to_json(net.w2);
  netj["w3"] = matrix_to_json(net.w3);
  netj["bin"] = vector_to_json(net.bin);
  netj["b1"] = vector_to_json(net.b1);
  netj["b2"] = vector_to_json(net.b2);
  netj["b3"] = vector_to_json(net.b3);
  netj["rff_w"] = matrix_to_json(net.rff_w);
  netj["rff_b"] = vector_to_json(net.rff_b);
  netj["beta"] = matrix_to_json(net.beta);
  netj["gp_covariance"] = matrix_to_json(net.gp_covariance);
  j["net"] = std::move(netj);

  write_file(path, j.dump() + "\n");
}

ModelArtifact load_model(const std::string& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const std::exception& e) {
    fail(std::string("malformed model file: ") + e.what());
  }
  require(j.at("kind") == "model_artifact", "not a model artifact file");
  require(j.at("format_version").get<int>() == 1, "unsupported model format_version");

  ModelArtifact model;
  model.template_id = j.at("template_id").get<std::string>();
  model.config = config_from_json(j.at("config"));
  model.featurizer = featurizer_from_json(j.at("featurizer"));
  for (const auto& fp : j.at("cover"))
    model.cover.push_back(PlanFingerprint::from_hex(fp.get<std::string>()));
  model.seed = j.at("seed").get<uint64_t>();
  model.config_digest = j.at("config_digest").get<std::string>();
  model.initial_loss = j.at("initial_loss").get<double>();
  model.final_loss = j.at("final_loss").get<double>();
  model.max_spectral_ratio = j.at("max_spectral_ratio").get<double>();

  const Json& netj = j.at("net");
  NetConfig cfg;
  cfg.numeric_inputs = netj.at("numeric_inputs").get<int>();
  cfg.embedding_buckets = netj.at("embedding_buckets").get<std::vector<int>>();
  cfg.embedding_dim = netj.at("embedding_dim").get<int>();
  cfg.hidden_units = netj.at("hidden_units").get<int>();
  cfg.rff_features = netj.at("rff_features").get<int>();
  cfg.rff_lengthscale = netj.at("rff_lengthscale").get<double>();
  cfg.heads = netj.at("heads").get<int>();
  cfg.spectral_bound = netj.at("spectral_bound").get<double>();
  SngpNet net(cfg, model.seed);
  net.embeddings.clear();
  for (const auto& e : netj.at("embeddings")) net.embeddings.push_back(matrix_from_json(e));
  net.win = matrix_from_json(netj.at("win"));
  net.w1 = matrix_from_json(netj.at("w1"));
  net.w2 = matrix_from_json(netj.at("w2"));
  net.w3 = matrix_from_json(netj.at("w3"));
  net.bin = vector_from_json(netj.at("bin"));
  net.b1 = vector_from_json(netj.at("b1"));
  net.b2 = vector_from_json(netj.at("b2"));
  net.b3 = vector_from_json(netj.at("b3"));
  net.rff_w = matrix_from_json(netj.at("rff_w"));
  net.rff_b = vector_from_json(netj.at("rff_b"));
  net.beta = matrix_from_json(netj.at("beta"));
  net.gp_covariance = matrix_from_json(netj.at("gp_covariance"));
  model.net = std::move(net);

  require(model.cover.size() == static_cast<size_t>(model.net.config.heads),
          "cover size does not match head count");
  return model;
}

}  // namespace pqo::learn
