#include "pqo/cli/pipeline.hpp"

#include <cstdio>
#include <filesystem>

#include "pqo/core/json_io.hpp"
#include "pqo/core/rng.hpp"
#include "pqo/eval/metrics.hpp"

namespace pqo::cli {

namespace {

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const std::exception& e) {
    throw ConfigError(std::string("bad config field '") + key + "': " + e.what());
  }
}

}  // namespace

Json to_json(const rce::RceParams& p) {
  return Json{{"generations", p.generations},
              {"exponent_base", p.exponent_base},
              {"exponent_range", p.exponent_range},
              {"samples_per_generation", p.samples_per_generation},
              {"perturbations_per_plan", p.perturbations_per_plan},
              {"subplan_perturbation_limit", p.subplan_perturbation_limit},
              {"per_instance_plan_limit", p.per_instance_plan_limit},
              {"total_plan_limit", p.total_plan_limit},
              {"seed", p.seed}};
}

rce::RceParams rce_params_from_json(const Json& j) {
  rce::RceParams p;
  p.generations = get_or(j, "generations", p.generations);
  p.exponent_base = get_or(j, "exponent_base", p.exponent_base);
  p.exponent_range = get_or(j, "exponent_range", p.exponent_range);
  p.samples_per_generation = get_or(j, "samples_per_generation", p.samples_per_generation);
  p.perturbations_per_plan = get_or(j, "perturbations_per_plan", p.perturbations_per_plan);
  p.subplan_perturbation_limit =
      get_or(j, "subplan_perturbation_limit", p.subplan_perturbation_limit);
  p.per_instance_plan_limit = get_or(j, "per_instance_plan_limit", p.per_instance_plan_limit);
  p.total_plan_limit = get_or(j, "total_plan_limit", p.total_plan_limit);
  p.seed = get_or(j, "seed", p.seed);
  try {
    p.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return p;
}

Json to_json(const collect::CollectionPolicy& p) {
  return Json{{"repeats", p.repeats},
              {"timeout_slack", p.timeout_slack},
              {"plan_cover_epsilon", p.plan_cover_epsilon},
              {"plan_cover_delta", p.plan_cover_delta},
              {"bootstrap_instances", p.bootstrap_instances},
              {"tail_reorder", p.tail_reorder}};
}

collect::CollectionPolicy policy_from_json(const Json& j) {
  collect::CollectionPolicy p;
  p.repeats = get_or(j, "repeats", p.repeats);
  p.timeout_slack = get_or(j, "timeout_slack", p.timeout_slack);
  p.plan_cover_epsilon = get_or(j, "plan_cover_epsilon", p.plan_cover_epsilon);
  p.plan_cover_delta = get_or(j, "plan_cover_delta", p.plan_cover_delta);
  p.bootstrap_instances = get_or(j, "bootstrap_instances", p.bootstrap_instances);
  p.tail_reorder = get_or(j, "tail_reorder", p.tail_reorder);
  try {
    p.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return p;
}

Json to_json(const learn::ModelConfig& c) {
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
              {"feature_mode", learn::to_string(c.feature_mode)}};
}

learn::ModelConfig model_config_from_json(const Json& j) {
  learn::ModelConfig c;
  c.hidden_units = get_or(j, "hidden_units", c.hidden_units);
  c.embedding_dim = get_or(j, "embedding_dim", c.embedding_dim);
  c.vocab_size = get_or(j, "vocab_size", c.vocab_size);
  c.oov_buckets = get_or(j, "oov_buckets", c.oov_buckets);
  c.rff_features = get_or(j, "rff_features", c.rff_features);
  c.rff_lengthscale = get_or(j, "rff_lengthscale", c.rff_lengthscale);
  c.gp_ridge = get_or(j, "gp_ridge", c.gp_ridge);
  c.gp_weight_floor = get_or(j, "gp_weight_floor", c.gp_weight_floor);
  c.spectral_bound = get_or(j, "spectral_bound", c.spectral_bound);
  c.learning_rate = get_or(j, "learning_rate", c.learning_rate);
  c.epochs = get_or(j, "epochs", c.epochs);
  c.batch_size = get_or(j, "batch_size", c.batch_size);
  c.tau = get_or(j, "tau", c.tau);
  c.regression_weight = get_or(j, "regression_weight", c.regression_weight);
  c.improvement_weight = get_or(j, "improvement_weight", c.improvement_weight);
  c.confidence_threshold = get_or(j, "confidence_threshold", c.confidence_threshold);
  if (j.contains("feature_mode"))
    c.feature_mode = learn::feature_mode_from_string(j.at("feature_mode").get<std::string>());
  try {
    c.validate();
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return c;
}

Json to_json(const PipelineConfig& c) {
  return Json{{"format_version", 1},
              {"seed", c.seed},
              {"scenario", Json{{"name", c.scenario_name}, {"instances", c.scenario_instances}}},
              {"rce", to_json(c.rce_params)},
              {"collection", to_json(c.policy)},
              {"model", to_json(c.model)},
              {"split", Json{{"train_fraction", c.train_fraction}}},
              {"outputs", Json{{"dir", c.output_dir}}}};
}

PipelineConfig pipeline_config_from_json(const Json& j) {
  PipelineConfig c;
  if (j.contains("format_version") && j.at("format_version").get<int>() != 1)
    throw ConfigError("unsupported config format_version");
  c.seed = get_or(j, "seed", c.seed);
  if (j.contains("scenario")) {
    c.scenario_name = get_or(j.at("scenario"), "name", c.scenario_name);
    c.scenario_instances = get_or(j.at("scenario"), "instances", c.scenario_instances);
  }
  if (j.contains("rce")) c.rce_params = rce_params_from_json(j.at("rce"));
  if (j.contains("collection")) c.policy = policy_from_json(j.at("collection"));
  if (j.contains("model")) c.model = model_config_from_json(j.at("model"));
  if (j.contains("split"))
    c.train_fraction = get_or(j.at("split"), "train_fraction", c.train_fraction);
  if (j.contains("outputs")) c.output_dir = get_or(j.at("outputs"), "dir", c.output_dir);
  if (c.train_fraction <= 0.0 || c.train_fraction >= 1.0)
    throw ConfigError("train_fraction must be in (0, 1)");
  if (c.scenario_instances < 2) throw ConfigError("scenario.instances must be >= 2");
  return c;
}

PipelineConfig load_pipeline_config(const std::string& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const std::exception& e) {
    throw ConfigError(std::string("cannot parse config: ") + e.what());
  }
  return pipeline_config_from_json(j);
}

std::string PipelineConfig::digest() const { return json_digest(to_json(*this)); }

namespace {

Json cost_to_json(const simdb::CostModel& c) {
  return Json{{"seq_scan_per_row", c.seq_scan_per_row},
              {"index_fixed", c.index_fixed},
              {"index_per_row", c.index_per_row},
              {"output_per_row", c.output_per_row},
              {"hash_fixed", c.hash_fixed},
              {"hash_build_per_row", c.hash_build_per_row},
              {"hash_probe_per_row", c.hash_probe_per_row},
              {"merge_per_row", c.merge_per_row},
              {"merge_sort_factor", c.merge_sort_factor},
              {"nl_outer_per_row", c.nl_outer_per_row},
              {"nl_per_pair", c.nl_per_pair},
              {"distortion_seq", c.distortion_seq},
              {"distortion_index", c.distortion_index},
              {"distortion_hash", c.distortion_hash},
              {"distortion_merge", c.distortion_merge},
              {"distortion_nl", c.distortion_nl}};
}

simdb::CostModel cost_from_json(const Json& j) {
  simdb::CostModel c;
  c.seq_scan_per_row = j.at("seq_scan_per_row").get<double>();
  c.index_fixed = j.at("index_fixed").get<double>();
  c.index_per_row = j.at("index_per_row").get<double>();
  c.output_per_row = j.at("output_per_row").get<double>();
  c.hash_fixed = j.at("hash_fixed").get<double>();
  c.hash_build_per_row = j.at("hash_build_per_row").get<double>();
  c.hash_probe_per_row = j.at("hash_probe_per_row").get<double>();
  c.merge_per_row = j.at("merge_per_row").get<double>();
  c.merge_sort_factor = j.at("merge_sort_factor").get<double>();
  c.nl_outer_per_row = j.at("nl_outer_per_row").get<double>();
  c.nl_per_pair = j.at("nl_per_pair").get<double>();
  c.distortion_seq = j.at("distortion_seq").get<double>();
  c.distortion_index = j.at("distortion_index").get<double>();
  c.distortion_hash = j.at("distortion_hash").get<double>();
  c.distortion_merge = j.at("distortion_merge").get<double>();
  c.distortion_nl = j.at("distortion_nl").get<double>();
  c.validate();
  return c;
}

}  // namespace

void save_engine(const simdb::Schema& schema, const simdb::CostModel& cost,
                 double noise_level, const std::string& path) {
  const std::string schema_part = [&] {
    const std::string tmp = path + ".schema.tmp";
    simdb::save_schema(schema, tmp);
    std::string text = read_file(tmp);
    std::filesystem::remove(tmp);
    return text;
  }();
  // engine header line, then the schema lines verbatim
  Json header;
  header["format_version"] = 1;
  header["kind"] = "sim_engine";
  header["noise_level"] = noise_level;
  header["cost_model"] = cost_to_json(cost);
  write_file(path, header.dump() + "\n" + schema_part);
}

Engine load_engine(const std::string& path) {
  const std::string text = read_file(path);
  const size_t eol = text.find('\n');
  require(eol != std::string::npos, "empty engine file");
  Json header;
  try {
    header = Json::parse(text.substr(0, eol));
  } catch (const std::exception& e) {
    fail(std::string("engine line 1: ") + e.what());
  }
  require(header.at("kind") == "sim_engine", "not a sim engine file");
  require(header.at("format_version").get<int>() == 1, "unsupported engine format_version");

  Engine engine;
  engine.noise_level = header.at("noise_level").get<double>();
  engine.cost = cost_from_json(header.at("cost_model"));
  const std::string tmp = path + ".schema.tmp";
  write_file(tmp, text.substr(eol + 1));
  engine.schema = simdb::load_schema(tmp);
  std::filesystem::remove(tmp);
  return engine;
}

StagePaths StagePaths::in_dir(const std::string& dir) {
  StagePaths p;
  p.engine = dir + "/engine.jsonl";
  p.workload = dir + "/workload.jsonl";
  p.candidates = dir + "/candidates.jsonl";
  p.dataset = dir + "/dataset.jsonl";
  p.collect_report = dir + "/collect_report.json";
  p.model = dir + "/model.json";
  p.metrics_json = dir + "/metrics.json";
  p.metrics_text = dir + "/metrics.txt";
  p.metrics_csv = dir + "/per_instance.csv";
  return p;
}

void stage_gen(const PipelineConfig& config, const StagePaths& paths) {
  simdb::Scenario scenario = simdb::make_scenario(config.scenario_name, config.seed);
  Workload workload =
      simdb::make_scenario_workload(scenario, config.scenario_instances, config.seed);
  save_engine(scenario.schema, scenario.cost, scenario.noise_level, paths.engine);
  save_workload(workload, scenario.tmpl, paths.workload);
}

namespace {

simdb::SimulatedOptimizer make_optimizer(const Engine& engine, const QueryTemplate& tmpl,
                                         uint64_t seed) {
  return simdb::SimulatedOptimizer(engine.schema, tmpl, engine.cost, engine.noise_level,
                                   seed);
}

}  // namespace

void stage_candidates(const PipelineConfig& config, const StagePaths& paths, int jobs) {
  Engine engine = load_engine(paths.engine);
  auto [workload, tmpl] = load_workload(paths.workload);
  simdb::SimulatedOptimizer optimizer = make_optimizer(engine, tmpl, config.seed);

  // candidate generation runs over the training split only
  auto [train_ids, test_ids] =
      split_indices(workload.instances.size(), config.train_fraction, config.seed);
  (void)test_ids;
  Workload train;
  train.template_id = workload.template_id;
  for (size_t i : train_ids) train.instances.push_back(workload.instances[i]);

  rce::RceParams params = config.rce_params;
  params.seed = params.seed == 0 ? config.seed : params.seed;
  rce::CandidateSet candidates =
      rce::workload_candidate_generation(train, optimizer, params, jobs);
  for (auto& c : candidates.candidates)
    c.source_instance = static_cast<int64_t>(train_ids[static_cast<size_t>(c.source_instance)]);
  rce::save_candidates(candidates, paths.candidates);
}

void stage_collect(const PipelineConfig& config, const StagePaths& paths) {
  Engine engine = load_engine(paths.engine);
  auto [workload, tmpl] = load_workload(paths.workload);
  rce::CandidateSet candidates = rce::load_candidates(paths.candidates);
  simdb::SimulatedOptimizer optimizer = make_optimizer(engine, tmpl, config.seed);

  collect::CollectReport report;
  Provenance provenance{config.seed, config.digest()};
  auto [dataset, cover] = collect::collect_training_data(workload, candidates, optimizer,
                                                         config.policy, provenance, &report);
  save_dataset(dataset, paths.dataset);
  collect::save_report(report, paths.collect_report);
}

void stage_train(const PipelineConfig& config, const StagePaths& paths) {
  ExecutionDataset dataset = load_dataset(paths.dataset);
  auto [workload, tmpl] = load_workload(paths.workload);
  require(dataset.template_id == tmpl.template_id, "dataset/workload template mismatch");
  require(!dataset.plan_cover.empty(), "dataset carries no plan cover; run collect first");

  auto [train_ids, test_ids] =
      split_indices(workload.instances.size(), config.train_fraction, config.seed);
  (void)test_ids;

  learn::TrainInputs inputs;
  inputs.dataset = &dataset;
  inputs.workload = &workload;
  inputs.tmpl = &tmpl;
  inputs.cover = dataset.plan_cover;
  inputs.train_ids = train_ids;
  Engine engine;
  if (config.model.feature_mode == learn::FeatureMode::Selectivity) {
    engine = load_engine(paths.engine);
    inputs.schema = &engine.schema;
  }
  learn::ModelArtifact model = learn::train_model(inputs, config.model, config.seed);
  model.config_digest = config.digest();
  learn::save_model(model, paths.model);
}

void stage_evaluate(const PipelineConfig& config, const StagePaths& paths) {
  ExecutionDataset dataset = load_dataset(paths.dataset);
  auto [workload, tmpl] = load_workload(paths.workload);
  learn::ModelArtifact model = learn::load_model(paths.model);

  auto [train_ids, test_ids] =
      split_indices(workload.instances.size(), config.train_fraction, config.seed);
  (void)train_ids;

  Engine engine;
  const simdb::Schema* schema = nullptr;
  if (model.config.feature_mode == learn::FeatureMode::Selectivity) {
    engine = load_engine(paths.engine);
    schema = &engine.schema;
  }

  std::map<int64_t, eval::Choice> choices;
  std::vector<int64_t> instances;
  for (size_t i : test_ids) {
    const auto choice = learn::predict(model, tmpl, workload.instances[i], schema);
    choices[static_cast<int64_t>(i)] =
        choice.is_fallback() ? eval::Choice{} : eval::Choice{*choice.plan};
    instances.push_back(static_cast<int64_t>(i));
  }

  eval::MetricsReport report =
      eval::evaluate(dataset, dataset.plan_cover, choices, instances);
  eval::save_metrics(report, paths.metrics_json, paths.metrics_text, paths.metrics_csv);
  std::fputs(eval::metrics_to_text(report).c_str(), stdout);
}

int run_pipeline(const PipelineConfig& config, const std::string& out_dir, int jobs) {
  std::filesystem::create_directories(out_dir);
  StagePaths paths = StagePaths::in_dir(out_dir);
  const char* stages[] = {"gen", "candidates", "collect", "train", "evaluate"};
  int stage_index = 0;
  try {
    stage_gen(config, paths);
    ++stage_index;
    stage_candidates(config, paths, jobs);
    ++stage_index;
    stage_collect(config, paths);
    ++stage_index;
    stage_train(config, paths);
    ++stage_index;
    stage_evaluate(config, paths);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "pqo: stage '%s' failed: %s\n", stages[stage_index], e.what());
    return 3;
  }
  return 0;
}

}  // namespace pqo::cli
