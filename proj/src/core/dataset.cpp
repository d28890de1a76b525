#include "pqo/core/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "pqo/core/error.hpp"
#include "pqo/core/json_io.hpp"

namespace pqo {

void ExecutionRecord::validate() const {
  require(!latencies_ms.empty(), "record has no latency measurements");
  for (double v : latencies_ms) require(v > 0.0, "latencies must be positive");
  if (censored) {
    require(timeout_ms.has_value(), "censored record without timeout");
    const double lo = *std::min_element(latencies_ms.begin(), latencies_ms.end());
    require(lo >= *timeout_ms - 1e-9, "censored record below its timeout");
  }
}

double estimated_latency(const ExecutionRecord& record) {
  require(!record.latencies_ms.empty(), "record has no latency measurements");
  if (record.censored) return *record.timeout_ms;
  return *std::min_element(record.latencies_ms.begin(), record.latencies_ms.end());
}

void ExecutionDataset::validate() const {
  const int64_t n = static_cast<int64_t>(default_plans.size());
  for (const auto& fp : default_plans)
    require(plans.count(fp) > 0, "default plan missing from plan table");
  for (const auto& fp : plan_cover)
    require(plans.count(fp) > 0, "cover plan missing from plan table");

  std::set<int64_t> instances_with_default;
  for (const auto& r : records) {
    r.validate();
    require(plans.count(r.fingerprint) > 0,
            "record fingerprint missing from plan table: " + r.fingerprint.to_hex());
    require(r.instance_index >= 0 && r.instance_index < n,
            "record instance index out of range");
    if (r.fingerprint == default_plans[static_cast<size_t>(r.instance_index)])
      instances_with_default.insert(r.instance_index);
  }
  for (int64_t i = 0; i < n; ++i)
    require(instances_with_default.count(i) > 0,
            "instance " + std::to_string(i) + " has no default-plan record");
}

std::map<std::pair<int64_t, PlanFingerprint>, const ExecutionRecord*>
ExecutionDataset::record_index() const {
  std::map<std::pair<int64_t, PlanFingerprint>, const ExecutionRecord*> index;
  for (const auto& r : records) index.emplace(std::make_pair(r.instance_index, r.fingerprint), &r);
  return index;
}

std::string dataset_to_jsonl(const ExecutionDataset& ds) {
  Json header;
  header["format_version"] = 1;
  header["kind"] = "execution_dataset";
  header["template_id"] = ds.template_id;
  header["provenance"] = {{"seed", ds.provenance.seed},
                          {"config_digest", ds.provenance.config_digest}};
  Json plans = Json::object();
  for (const auto& [fp, tree] : ds.plans) plans[fp.to_hex()] = to_json(tree);
  header["plans"] = std::move(plans);
  Json defaults = Json::array();
  for (const auto& fp : ds.default_plans) defaults.push_back(fp.to_hex());
  header["default_plans"] = std::move(defaults);
  Json cover = Json::array();
  for (const auto& fp : ds.plan_cover) cover.push_back(fp.to_hex());
  header["plan_cover"] = std::move(cover);

  std::string out = header.dump();
  out += '\n';
  for (const auto& r : ds.records) {
    out += to_json(r).dump();
    out += '\n';
  }
  return out;
}

ExecutionDataset dataset_from_jsonl(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  size_t line_no = 0;
  ExecutionDataset ds;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
    } catch (const std::exception& e) {
      fail("dataset line " + std::to_string(line_no) + ": malformed JSON (" + e.what() + ")");
    }
    try {
      if (line_no == 1) {
        require(j.at("kind") == "execution_dataset", "not an execution dataset file");
        require(j.at("format_version").get<int>() == 1,
                "unsupported dataset format_version");
        ds.template_id = j.at("template_id").get<std::string>();
        ds.provenance.seed = j.at("provenance").at("seed").get<uint64_t>();
        ds.provenance.config_digest = j.at("provenance").at("config_digest").get<std::string>();
        for (const auto& [hex, tree] : j.at("plans").items())
          ds.plans.emplace(PlanFingerprint::from_hex(hex), plan_from_json(tree));
        for (const auto& fp : j.at("default_plans"))
          ds.default_plans.push_back(PlanFingerprint::from_hex(fp.get<std::string>()));
        for (const auto& fp : j.at("plan_cover"))
          ds.plan_cover.push_back(PlanFingerprint::from_hex(fp.get<std::string>()));
      } else {
        ds.records.push_back(record_from_json(j));
      }
    } catch (const std::exception& e) {
      fail("dataset line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  require(line_no >= 1, "empty dataset file");
  ds.validate();
  return ds;
}

void save_dataset(const ExecutionDataset& ds, const std::string& path) {
  write_file(path, dataset_to_jsonl(ds));
}

ExecutionDataset load_dataset(const std::string& path) {
  return dataset_from_jsonl(read_file(path));
}

}  // namespace pqo
