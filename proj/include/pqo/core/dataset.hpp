#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pqo/core/plan.hpp"
#include "pqo/core/types.hpp"

namespace pqo {

struct ExecutionRecord {
  int64_t instance_index = 0;
  PlanFingerprint fingerprint;
  std::vector<double> latencies_ms;  // k >= 1 repeat measurements
  bool censored = false;
  std::optional<double> timeout_ms;

  void validate() const;
};

// min over repeats; censored records report their timeout (a lower bound).
double estimated_latency(const ExecutionRecord& record);

struct Provenance {
  uint64_t seed = 0;
  std::string config_digest;
};

struct ExecutionDataset {
  std::string template_id;
  std::map<PlanFingerprint, PlanTree> plans;       // plan table
  std::vector<PlanFingerprint> default_plans;      // per instance, frozen at collection
  std::vector<PlanFingerprint> plan_cover;         // empty until pruning ran
  std::vector<ExecutionRecord> records;
  Provenance provenance;

  size_t instance_count() const { return default_plans.size(); }
  void validate() const;

  // (instance, fingerprint) -> estimated latency of the matching record.
  // Multiple records for the same pair keep the first (collection order).
  std::map<std::pair<int64_t, PlanFingerprint>, const ExecutionRecord*> record_index() const;
};

// Line-delimited JSON: one header line, then one line per record.
void save_dataset(const ExecutionDataset& ds, const std::string& path);
ExecutionDataset load_dataset(const std::string& path);
std::string dataset_to_jsonl(const ExecutionDataset& ds);
ExecutionDataset dataset_from_jsonl(const std::string& text);

}  // namespace pqo
