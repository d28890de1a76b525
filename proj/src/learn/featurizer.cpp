#include "pqo/learn/featurizer.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "pqo/core/error.hpp"
#include "pqo/core/rng.hpp"
#include "pqo/simdb/cardinality.hpp"

namespace pqo::learn {

std::string to_string(FeatureMode m) {
  return m == FeatureMode::RawParams ? "raw_params" : "selectivity";
}

FeatureMode feature_mode_from_string(const std::string& s) {
  if (s == "raw_params") return FeatureMode::RawParams;
  if (s == "selectivity") return FeatureMode::Selectivity;
  fail("unknown feature mode: " + s);
}

int Vocabulary::index_of(const std::string& value) const {
  for (size_t i = 0; i < values.size(); ++i)
    if (values[i] == value) return static_cast<int>(i);
  return static_cast<int>(values.size()) +
         static_cast<int>(fnv1a64(value) % static_cast<uint64_t>(oov_buckets));
}

namespace {

// default latency and best uncensored latency per instance
std::map<int64_t, std::pair<double, double>> latency_table(const ExecutionDataset& ds) {
  std::map<int64_t, std::pair<double, double>> out;  // instance -> (default, best)
  for (const auto& r : ds.records) {
    const bool is_default =
        r.fingerprint == ds.default_plans[static_cast<size_t>(r.instance_index)];
    const double latency = estimated_latency(r);
    auto [it, inserted] = out.emplace(r.instance_index,
                                      std::make_pair(0.0, std::numeric_limits<double>::max()));
    if (is_default) it->second.first = latency;
    if (!r.censored) it->second.second = std::min(it->second.second, latency);
  }
  return out;
}

}  // namespace

Vocabulary build_vocabulary(const ExecutionDataset& dataset, const Workload& workload,
                            const std::vector<size_t>& instance_ids, int param_slot, int k,
                            int oov_buckets) {
  require(k >= 1, "vocabulary size must be >= 1");
  require(oov_buckets >= 1, "OOV bucket count must be >= 1");
  const auto latencies = latency_table(dataset);

  std::map<std::string, double> improvement;
  for (size_t i : instance_ids) {
    const auto& binding = workload.instances[i].bindings[static_cast<size_t>(param_slot)];
    require(binding.type == ParamType::String, "vocabulary requires a string column");
    auto it = latencies.find(static_cast<int64_t>(i));
    if (it == latencies.end()) continue;
    const auto& [def, best] = it->second;
    improvement[binding.s] += std::max(0.0, def - best);
  }

  std::vector<std::pair<double, std::string>> ranked;  // (-score, value)
  for (const auto& [value, score] : improvement) ranked.emplace_back(-score, value);
  std::sort(ranked.begin(), ranked.end());

  Vocabulary vocab;
  vocab.param_slot = param_slot;
  vocab.oov_buckets = oov_buckets;
  for (const auto& [neg_score, value] : ranked) {
    if (static_cast<int>(vocab.values.size()) >= k) break;
    vocab.values.push_back(value);
  }
  return vocab;
}

FeaturizerState::Features FeaturizerState::transform(const QueryTemplate& tmpl,
                                                     const QueryInstance& instance,
                                                     const simdb::Schema* schema) const {
  instance.validate_against(tmpl);
  Features f;
  for (const auto& stat : numerics) {
    double raw = 0.0;
    if (mode == FeatureMode::Selectivity) {
      require(schema != nullptr, "selectivity features need a schema handle");
      raw = simdb::predicate_selectivity(*schema, tmpl, instance,
                                         static_cast<size_t>(stat.param_slot));
    } else {
      const auto& b = instance.bindings[static_cast<size_t>(stat.param_slot)];
      switch (b.type) {
        case ParamType::Int:
        case ParamType::Date:
          raw = static_cast<double>(b.i);
          break;
        case ParamType::Float:
          raw = b.f;
          break;
        case ParamType::String:
          fail("string slot in numeric feature list");
      }
    }
    f.numeric.push_back((raw - stat.mean) / stat.stddev);
  }
  for (const auto& vocab : vocabularies) {
    const auto& b = instance.bindings[static_cast<size_t>(vocab.param_slot)];
    require(b.type == ParamType::String, "vocabulary bound to a non-string slot");
    f.string_indices.push_back(vocab.index_of(b.s));
  }
  return f;
}

FeaturizerState fit_featurizer(const QueryTemplate& tmpl, const Workload& workload,
                               const std::vector<size_t>& train_ids,
                               const ExecutionDataset& dataset, FeatureMode mode,
                               int vocab_size, int oov_buckets, const simdb::Schema* schema) {
  require(!train_ids.empty(), "featurizer needs training instances");
  FeaturizerState state;
  state.mode = mode;

  auto fit_numeric = [&](int slot_or_pred, auto&& value_of) {
    double sum = 0.0, sum_sq = 0.0;
    for (size_t i : train_ids) {
      const double v = value_of(workload.instances[i]);
      sum += v;
      sum_sq += v * v;
    }
    const double n = static_cast<double>(train_ids.size());
    const double mean = sum / n;
    double var = sum_sq / n - mean * mean;
    double stddev = var > 1e-12 ? std::sqrt(var) : 1.0;  // degenerate-column guard
    state.numerics.push_back({slot_or_pred, mean, stddev});
  };

  if (mode == FeatureMode::Selectivity) {
    require(schema != nullptr, "selectivity features need a schema handle");
    for (size_t p = 0; p < tmpl.predicates.size(); ++p) {
      fit_numeric(static_cast<int>(p), [&](const QueryInstance& q) {
        return simdb::predicate_selectivity(*schema, tmpl, q, p);
      });
    }
    return state;
  }

  for (size_t slot = 0; slot < tmpl.param_specs.size(); ++slot) {
    switch (tmpl.param_specs[slot].type) {
      case ParamType::Int:
      case ParamType::Date:
        fit_numeric(static_cast<int>(slot), [&](const QueryInstance& q) {
          return static_cast<double>(q.bindings[slot].i);
        });
        break;
      case ParamType::Float:
        fit_numeric(static_cast<int>(slot),
                    [&](const QueryInstance& q) { return q.bindings[slot].f; });
        break;
      case ParamType::String:
        state.vocabularies.push_back(build_vocabulary(
            dataset, workload, train_ids, static_cast<int>(slot), vocab_size, oov_buckets));
        break;
    }
  }
  return state;
}

}  // namespace pqo::learn
