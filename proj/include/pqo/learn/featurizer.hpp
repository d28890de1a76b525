#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pqo/core/dataset.hpp"
#include "pqo/core/types.hpp"
#include "pqo/simdb/schema.hpp"

namespace pqo::learn {

enum class FeatureMode { RawParams, Selectivity };

std::string to_string(FeatureMode m);
FeatureMode feature_mode_from_string(const std::string& s);

// Fixed-size vocabulary for one string parameter, ranked by max marginal
// improvement; out-of-vocabulary values hash into dedicated buckets.
struct Vocabulary {
  int param_slot = 0;
  std::vector<std::string> values;  // top-k, rank order
  int oov_buckets = 1;

  int bucket_count() const { return static_cast<int>(values.size()) + oov_buckets; }
  int index_of(const std::string& value) const;
};

// Ranks a string column's values by the total latency improvement available
// on instances carrying that value: sum of (default - oracle best).
Vocabulary build_vocabulary(const ExecutionDataset& dataset, const Workload& workload,
                            const std::vector<size_t>& instance_ids, int param_slot, int k,
                            int oov_buckets);

struct FeaturizerState {
  FeatureMode mode = FeatureMode::RawParams;
  struct NumericStat {
    int param_slot = 0;  // RawParams: slot; Selectivity: predicate index
    double mean = 0.0;
    double stddev = 1.0;
  };
  std::vector<NumericStat> numerics;
  std::vector<Vocabulary> vocabularies;  // string slots, RawParams mode only

  size_t numeric_dim() const { return numerics.size(); }
  size_t string_dim() const { return vocabularies.size(); }

  // Selectivity mode needs the schema handle; RawParams works standalone.
  struct Features {
    std::vector<double> numeric;
    std::vector<int> string_indices;  // one vocabulary bucket per string slot
  };
  Features transform(const QueryTemplate& tmpl, const QueryInstance& instance,
                     const simdb::Schema* schema = nullptr) const;
};

FeaturizerState fit_featurizer(const QueryTemplate& tmpl, const Workload& workload,
                               const std::vector<size_t>& train_ids,
                               const ExecutionDataset& dataset, FeatureMode mode,
                               int vocab_size, int oov_buckets,
                               const simdb::Schema* schema = nullptr);

}  // namespace pqo::learn
