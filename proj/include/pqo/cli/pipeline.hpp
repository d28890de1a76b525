#pragma once

#include <string>

#include <json.hpp>

#include "pqo/collect/collect.hpp"
#include "pqo/core/error.hpp"
#include "pqo/learn/model.hpp"
#include "pqo/rce/rce.hpp"
#include "pqo/simdb/scenario.hpp"

namespace pqo::cli {

using Json = nlohmann::json;

class ConfigError : public Error {
 public:
  using Error::Error;
};

// One JSON document drives the whole pipeline; stage subcommands accept the
// same sub-documents as standalone files.
struct PipelineConfig {
  uint64_t seed = 5;
  std::string scenario_name = "param_sensitive";
  size_t scenario_instances = 240;
  rce::RceParams rce_params;
  collect::CollectionPolicy policy;
  learn::ModelConfig model;
  double train_fraction = 0.8;
  std::string output_dir = "out";

  std::string digest() const;
};

Json to_json(const rce::RceParams& p);
rce::RceParams rce_params_from_json(const Json& j);
Json to_json(const collect::CollectionPolicy& p);
collect::CollectionPolicy policy_from_json(const Json& j);
Json to_json(const learn::ModelConfig& c);
learn::ModelConfig model_config_from_json(const Json& j);
Json to_json(const PipelineConfig& c);
PipelineConfig pipeline_config_from_json(const Json& j);
PipelineConfig load_pipeline_config(const std::string& path);

// A simulated engine file bundles the schema with the cost model and noise so
// later stages consume exactly the files named in the config. A live-DBMS
// adapter would replace this seam.
void save_engine(const simdb::Schema& schema, const simdb::CostModel& cost,
                 double noise_level, const std::string& path);
struct Engine {
  simdb::Schema schema;
  simdb::CostModel cost;
  double noise_level = 0.02;
};
Engine load_engine(const std::string& path);

struct StagePaths {
  std::string engine;
  std::string workload;
  std::string candidates;
  std::string dataset;
  std::string collect_report;
  std::string model;
  std::string metrics_json;
  std::string metrics_text;
  std::string metrics_csv;

  static StagePaths in_dir(const std::string& dir);
};

// Stage entry points shared by the subcommands and run_pipeline.
void stage_gen(const PipelineConfig& config, const StagePaths& paths);
void stage_candidates(const PipelineConfig& config, const StagePaths& paths, int jobs);
void stage_collect(const PipelineConfig& config, const StagePaths& paths);
void stage_train(const PipelineConfig& config, const StagePaths& paths);
void stage_evaluate(const PipelineConfig& config, const StagePaths& paths);

// The five stages end to end; returns the process exit code.
int run_pipeline(const PipelineConfig& config, const std::string& out_dir, int jobs);

}  // namespace pqo::cli
