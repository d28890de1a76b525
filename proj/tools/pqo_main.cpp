#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>

#include <CLI11.hpp>

#include "pqo/cli/pipeline.hpp"
#include "pqo/core/json_io.hpp"

using namespace pqo;
using cli::Json;

namespace {

// Stage subcommands accept either the pipeline config or standalone parameter
// files carrying the matching sub-document.
cli::PipelineConfig load_config_or_default(const std::string& path) {
  if (path.empty()) return cli::PipelineConfig{};
  return cli::load_pipeline_config(path);
}

int guarded(const std::function<void()>& body) {
  try {
    body();
    return 0;
  } catch (const cli::ConfigError& e) {
    std::fprintf(stderr, "pqo: config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "pqo: %s\n", e.what());
    return 3;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"parametric query optimization toolkit"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "out";
  std::string engine_path, workload_path, plans_path, dataset_path, model_path;
  std::string params_path, policy_path, report_path;
  std::string out_path, out_json, out_text, out_csv;
  double train_fraction = 0.8;
  uint64_t seed = 5;
  int jobs = 1;
  int64_t instance_index = -1;

  auto* gen = app.add_subcommand("gen", "generate a simulated engine and workload");
  gen->add_option("--config", config_path, "pipeline config JSON")->required();
  gen->add_option("--out-dir", out_dir, "output directory");

  auto* candidates =
      app.add_subcommand("candidates", "evolve candidate plans over the training split");
  candidates->add_option("--schema", engine_path, "sim engine file")->required();
  candidates->add_option("--workload", workload_path, "workload file")->required();
  candidates->add_option("--params", params_path, "RCE parameter JSON");
  candidates->add_option("--config", config_path, "pipeline config JSON");
  candidates->add_option("--out", out_path, "candidate set output")->required();
  candidates->add_option("--jobs", jobs, "worker parallelism");
  candidates->add_option("--seed", seed, "seed override");

  auto* collect = app.add_subcommand("collect", "execute candidates and prune to a cover");
  collect->add_option("--schema", engine_path, "sim engine file")->required();
  collect->add_option("--workload", workload_path, "workload file")->required();
  collect->add_option("--plans", plans_path, "candidate set file")->required();
  collect->add_option("--policy", policy_path, "collection policy JSON");
  collect->add_option("--config", config_path, "pipeline config JSON");
  collect->add_option("--out", out_path, "dataset output")->required();
  collect->add_option("--report", report_path, "collection report output");
  collect->add_option("--seed", seed, "seed override");

  auto* train = app.add_subcommand("train", "train the best-plan predictor");
  train->add_option("--dataset", dataset_path, "execution dataset")->required();
  train->add_option("--workload", workload_path, "workload file")->required();
  train->add_option("--schema", engine_path, "sim engine (selectivity features)");
  train->add_option("--model-config", params_path, "model config JSON");
  train->add_option("--config", config_path, "pipeline config JSON");
  train->add_option("--out", out_path, "model artifact output")->required();
  train->add_option("--train-fraction", train_fraction, "train split fraction");
  train->add_option("--seed", seed, "split/train seed");

  auto* evaluate = app.add_subcommand("evaluate", "score the model on the test split");
  evaluate->add_option("--dataset", dataset_path, "execution dataset")->required();
  evaluate->add_option("--workload", workload_path, "workload file")->required();
  evaluate->add_option("--model", model_path, "model artifact")->required();
  evaluate->add_option("--schema", engine_path, "sim engine (selectivity features)");
  evaluate->add_option("--out-json", out_json, "metrics JSON output");
  evaluate->add_option("--out-text", out_text, "metrics text output");
  evaluate->add_option("--csv", out_csv, "per-instance CSV output");
  evaluate->add_option("--train-fraction", train_fraction, "train split fraction");
  evaluate->add_option("--seed", seed, "split seed");

  auto* run = app.add_subcommand("run", "run all pipeline stages");
  run->add_option("--config", config_path, "pipeline config JSON")->required();
  run->add_option("--out-dir", out_dir, "output directory (defaults to config)");
  run->add_option("--jobs", jobs, "worker parallelism");

  auto* predict = app.add_subcommand("predict", "predict plans for workload instances");
  predict->add_option("--model", model_path, "model artifact")->required();
  predict->add_option("--workload", workload_path, "workload file")->required();
  predict->add_option("--schema", engine_path, "sim engine (selectivity features)");
  predict->add_option("--instance", instance_index, "single instance index");

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    return guarded([&] {
      cli::PipelineConfig config = cli::load_pipeline_config(config_path);
      std::filesystem::create_directories(out_dir);
      cli::stage_gen(config, cli::StagePaths::in_dir(out_dir));
    });
  }

  if (candidates->parsed()) {
    return guarded([&] {
      cli::PipelineConfig config = load_config_or_default(config_path);
      if (!params_path.empty())
        config.rce_params = cli::rce_params_from_json(Json::parse(read_file(params_path)));
      if (candidates->count("--seed")) config.seed = seed;
      cli::StagePaths paths;
      paths.engine = engine_path;
      paths.workload = workload_path;
      paths.candidates = out_path;
      cli::stage_candidates(config, paths, jobs);
    });
  }

  if (collect->parsed()) {
    return guarded([&] {
      cli::PipelineConfig config = load_config_or_default(config_path);
      if (!policy_path.empty())
        config.policy = cli::policy_from_json(Json::parse(read_file(policy_path)));
      if (collect->count("--seed")) config.seed = seed;
      cli::StagePaths paths;
      paths.engine = engine_path;
      paths.workload = workload_path;
      paths.candidates = plans_path;
      paths.dataset = out_path;
      paths.collect_report = report_path.empty() ? out_path + ".report.json" : report_path;
      cli::stage_collect(config, paths);
    });
  }

  if (train->parsed()) {
    return guarded([&] {
      cli::PipelineConfig config = load_config_or_default(config_path);
      if (!params_path.empty())
        config.model = cli::model_config_from_json(Json::parse(read_file(params_path)));
      if (train->count("--train-fraction")) config.train_fraction = train_fraction;
      if (train->count("--seed")) config.seed = seed;
      cli::StagePaths paths;
      paths.dataset = dataset_path;
      paths.workload = workload_path;
      paths.engine = engine_path;
      paths.model = out_path;
      cli::stage_train(config, paths);
    });
  }

  if (evaluate->parsed()) {
    return guarded([&] {
      cli::PipelineConfig config = load_config_or_default(config_path);
      if (evaluate->count("--train-fraction")) config.train_fraction = train_fraction;
      if (evaluate->count("--seed")) config.seed = seed;
      cli::StagePaths paths;
      paths.dataset = dataset_path;
      paths.workload = workload_path;
      paths.model = model_path;
      paths.engine = engine_path;
      paths.metrics_json = out_json;
      paths.metrics_text = out_text;
      paths.metrics_csv = out_csv;
      cli::stage_evaluate(config, paths);
    });
  }

  if (run->parsed()) {
    return guarded([&] {
      cli::PipelineConfig config = cli::load_pipeline_config(config_path);
      const std::string dir = run->count("--out-dir") ? out_dir : config.output_dir;
      const int status = cli::run_pipeline(config, dir, jobs);
      if (status != 0) throw Error("pipeline failed");
    });
  }

  if (predict->parsed()) {
    return guarded([&] {
      learn::ModelArtifact model = learn::load_model(model_path);
      auto [workload, tmpl] = load_workload(workload_path);
      cli::Engine engine;
      const simdb::Schema* schema = nullptr;
      if (model.config.feature_mode == learn::FeatureMode::Selectivity) {
        engine = cli::load_engine(engine_path);
        schema = &engine.schema;
      }
      std::vector<size_t> targets;
      if (instance_index >= 0) {
        require(static_cast<size_t>(instance_index) < workload.instances.size(),
                "instance index out of range");
        targets.push_back(static_cast<size_t>(instance_index));
      } else {
        for (size_t i = 0; i < workload.instances.size(); ++i) targets.push_back(i);
      }
      double total_us = 0.0;
      for (size_t i : targets) {
        const auto start = std::chrono::steady_clock::now();
        const auto choice = learn::predict(model, tmpl, workload.instances[i], schema);
        const auto stop = std::chrono::steady_clock::now();
        total_us += std::chrono::duration<double, std::micro>(stop - start).count();
        std::printf("%zu\t%s\t%.4f\n", i,
                    choice.is_fallback() ? "FALLBACK" : choice.plan->to_hex().c_str(),
                    choice.confidence);
      }
      std::fprintf(stderr, "pqo: predict %.1f us/instance over %zu instances\n",
                   total_us / static_cast<double>(targets.size()), targets.size());
    });
  }

  return 0;
}
