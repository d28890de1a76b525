#include "pqo/eval/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "pqo/core/error.hpp"
#include "pqo/core/json_io.hpp"

namespace pqo::eval {

namespace {

struct LatencyView {
  const ExecutionDataset* dataset;
  std::map<std::pair<int64_t, PlanFingerprint>, const ExecutionRecord*> index;

  explicit LatencyView(const ExecutionDataset& ds) : dataset(&ds), index(ds.record_index()) {}

  double default_latency(int64_t instance) const {
    auto it = index.find({instance, dataset->default_plans[static_cast<size_t>(instance)]});
    require(it != index.end(),
            "instance " + std::to_string(instance) + " has no default record");
    return estimated_latency(*it->second);
  }

  std::optional<double> latency(int64_t instance, const PlanFingerprint& fp) const {
    auto it = index.find({instance, fp});
    if (it == index.end()) return std::nullopt;
    return estimated_latency(*it->second);  // censored records sit at their timeout
  }
};

}  // namespace

double oracle_speedup(const ExecutionDataset& dataset,
                      const std::vector<PlanFingerprint>& plan_set,
                      const std::vector<int64_t>& instances) {
  require(!instances.empty(), "oracle speedup needs instances");
  LatencyView view(dataset);
  double default_total = 0.0;
  double best_total = 0.0;
  for (int64_t i : instances) {
    const double def = view.default_latency(i);
    double best = std::numeric_limits<double>::max();
    for (const auto& fp : plan_set) {
      if (auto l = view.latency(i, fp)) best = std::min(best, *l);
    }
    require(best < std::numeric_limits<double>::max(),
            "instance " + std::to_string(i) + " has no record in the plan set");
    default_total += def;
    best_total += best;
  }
  return default_total / best_total;
}

double model_speedup(const ExecutionDataset& dataset,
                     const std::map<int64_t, Choice>& choices,
                     const std::vector<int64_t>& instances) {
  require(!instances.empty(), "model speedup needs instances");
  LatencyView view(dataset);
  double default_total = 0.0;
  double chosen_total = 0.0;
  for (int64_t i : instances) {
    const double def = view.default_latency(i);
    default_total += def;
    auto it = choices.find(i);
    const Choice choice = it == choices.end() ? Choice{} : it->second;
    if (!choice) {
      chosen_total += def;  // fallbacks resolve to the default plan
      continue;
    }
    auto latency = view.latency(i, *choice);
    require(latency.has_value(), "chosen plan " + choice->to_hex() +
                                     " has no record for instance " + std::to_string(i));
    chosen_total += *latency;
  }
  return default_total / chosen_total;
}

double percentile_99(std::vector<double> values) {
  require(!values.empty(), "p99 of an empty list");
  std::sort(values.begin(), values.end());
  const size_t rank = std::min(values.size(),
                               static_cast<size_t>(std::floor(0.99 * values.size())) + 1);
  return values[rank - 1];
}

double tail_speedup_p99(const ExecutionDataset& dataset,
                        const std::map<int64_t, Choice>& choices,
                        const std::vector<int64_t>& instances) {
  LatencyView view(dataset);
  std::vector<double> defaults, chosen;
  for (int64_t i : instances) {
    const double def = view.default_latency(i);
    defaults.push_back(def);
    auto it = choices.find(i);
    const Choice choice = it == choices.end() ? Choice{} : it->second;
    if (!choice) {
      chosen.push_back(def);
    } else {
      auto latency = view.latency(i, *choice);
      require(latency.has_value(), "chosen plan has no record");
      chosen.push_back(*latency);
    }
  }
  return percentile_99(defaults) / percentile_99(chosen);
}

double regression_frequency(const ExecutionDataset& dataset,
                            const std::map<int64_t, Choice>& choices,
                            const std::vector<int64_t>& instances, double threshold) {
  require(!instances.empty(), "regression frequency needs instances");
  LatencyView view(dataset);
  size_t regressions = 0;
  for (int64_t i : instances) {
    auto it = choices.find(i);
    const Choice choice = it == choices.end() ? Choice{} : it->second;
    if (!choice) continue;  // falling back can never regress
    auto latency = view.latency(i, *choice);
    require(latency.has_value(), "chosen plan has no record");
    if (*latency > (1.0 + threshold) * view.default_latency(i)) ++regressions;
  }
  return static_cast<double>(regressions) / static_cast<double>(instances.size());
}

double single_best_plan_ratio(const ExecutionDataset& dataset,
                              const std::vector<PlanFingerprint>& plan_set,
                              const std::vector<int64_t>& instances) {
  require(!plan_set.empty(), "plan set must be non-empty");
  LatencyView view(dataset);

  // restrict to instances carrying the full matrix over plan_set
  std::vector<int64_t> usable;
  for (int64_t i : instances) {
    bool full = true;
    for (const auto& fp : plan_set)
      if (!view.latency(i, fp)) full = false;
    if (full) usable.push_back(i);
  }
  require(!usable.empty(), "no instance has a full latency matrix");

  double oracle_total = 0.0;
  for (int64_t i : usable) {
    double best = std::numeric_limits<double>::max();
    for (const auto& fp : plan_set) best = std::min(best, *view.latency(i, fp));
    oracle_total += best;
  }
  double best_single = std::numeric_limits<double>::max();
  for (const auto& fp : plan_set) {
    double total = 0.0;
    for (int64_t i : usable) total += *view.latency(i, fp);
    best_single = std::min(best_single, total);
  }
  return oracle_total / best_single;
}

double geometric_mean(const std::vector<double>& values) {
  require(!values.empty(), "geometric mean of an empty list");
  double log_sum = 0.0;
  for (double v : values) {
    require(v > 0.0, "geometric mean needs positive values");
    log_sum += std::log(v);
  }
  return std::exp(log_sum / static_cast<double>(values.size()));
}

MetricsReport evaluate(const ExecutionDataset& dataset,
                       const std::vector<PlanFingerprint>& plan_set,
                       const std::map<int64_t, Choice>& choices,
                       const std::vector<int64_t>& instances,
                       double regression_threshold) {
  MetricsReport report;
  report.instances = instances.size();
  report.plan_cover_size = dataset.plan_cover.size();

  // the oracle always has the default available
  std::vector<PlanFingerprint> with_defaults = plan_set;
  for (int64_t i : instances) {
    const auto& def = dataset.default_plans[static_cast<size_t>(i)];
    if (std::find(with_defaults.begin(), with_defaults.end(), def) == with_defaults.end())
      with_defaults.push_back(def);
  }

  report.s_opt = oracle_speedup(dataset, with_defaults, instances);
  report.s_model = model_speedup(dataset, choices, instances);
  report.capture_fraction = report.s_model / report.s_opt;
  report.p99_speedup = tail_speedup_p99(dataset, choices, instances);
  report.regression_frequency =
      regression_frequency(dataset, choices, instances, regression_threshold);

  LatencyView view(dataset);
  size_t fallbacks = 0;
  for (int64_t i : instances) {
    auto it = choices.find(i);
    const Choice choice = it == choices.end() ? Choice{} : it->second;
    MetricsReport::InstanceRow row;
    row.instance = i;
    row.default_ms = view.default_latency(i);
    row.fallback = !choice.has_value();
    row.chosen_ms = choice ? *view.latency(i, *choice) : row.default_ms;
    if (row.fallback) ++fallbacks;
    report.per_instance.push_back(row);
  }
  report.fallback_fraction =
      static_cast<double>(fallbacks) / static_cast<double>(instances.size());

  // single-best-plan suboptimality over whatever full-matrix prefix exists
  bool has_full = false;
  for (int64_t i : instances) {
    bool full = true;
    for (const auto& fp : with_defaults)
      if (!view.latency(i, fp)) full = false;
    if (full) has_full = true;
  }
  if (has_full)
    report.single_best_plan_ratio = single_best_plan_ratio(dataset, with_defaults, instances);
  return report;
}

std::string metrics_to_text(const MetricsReport& r) {
  char buf[512];
  std::snprintf(buf, sizeof(buf),
                "instances              %zu\n"
                "oracle speedup         %.4f\n"
                "model speedup          %.4f\n"
                "capture fraction       %.4f\n"
                "p99 tail speedup       %.4f\n"
                "regression frequency   %.4f\n"
                "fallback fraction      %.4f\n"
                "plan cover size        %zu\n"
                "single-best-plan ratio %.4f\n",
                r.instances, r.s_opt, r.s_model, r.capture_fraction, r.p99_speedup,
                r.regression_frequency, r.fallback_fraction, r.plan_cover_size,
                r.single_best_plan_ratio);
  return buf;
}

void save_metrics(const MetricsReport& r, const std::string& json_path,
                  const std::string& text_path, const std::string& csv_path) {
  Json j;
  j["format_version"] = 1;
  j["kind"] = "metrics_report";
  j["instances"] = r.instances;
  j["oracle_speedup"] = r.s_opt;
  j["model_speedup"] = r.s_model;
  j["capture_fraction"] = r.capture_fraction;
  j["p99_speedup"] = r.p99_speedup;
  j["regression_frequency"] = r.regression_frequency;
  j["fallback_fraction"] = r.fallback_fraction;
  j["plan_cover_size"] = r.plan_cover_size;
  j["single_best_plan_ratio"] = r.single_best_plan_ratio;
  if (!json_path.empty()) write_file(json_path, j.dump() + "\n");
  if (!text_path.empty()) write_file(text_path, metrics_to_text(r));
  if (!csv_path.empty()) {
    std::string csv = "instance,default_ms,chosen_ms,delta_ms,fallback\n";
    for (const auto& row : r.per_instance) {
      char line[160];
      std::snprintf(line, sizeof(line), "%lld,%.6f,%.6f,%.6f,%d\n",
                    static_cast<long long>(row.instance), row.default_ms, row.chosen_ms,
                    row.default_ms - row.chosen_ms, row.fallback ? 1 : 0);
      csv += line;
    }
    write_file(csv_path, csv);
  }
}

ExactCardinalityRow exact_cardinality_comparison(const simdb::SimulatedOptimizer& optimizer,
                                                 const Workload& workload,
                                                 const rce::CandidateSet& candidates) {
  require(!workload.instances.empty(), "empty workload");
  require(!candidates.candidates.empty(), "empty candidate set");
  ExactCardinalityRow row;
  row.template_id = workload.template_id;
  for (const auto& q : workload.instances) {
    double best_rce = std::numeric_limits<double>::max();
    for (const auto& c : candidates.candidates)
      best_rce = std::min(best_rce, optimizer.true_latency(c.plan, q));
    const PlanTree exact = optimizer.exact_cardinality_plan(q);
    const PlanTree def = optimizer.plan(q, RowCountMap{});
    row.best_rce_ms += best_rce;
    row.exact_cardinality_ms += optimizer.true_latency(exact, q);
    row.default_ms += optimizer.true_latency(def, q);
  }
  const double n = static_cast<double>(workload.instances.size());
  row.best_rce_ms /= n;
  row.exact_cardinality_ms /= n;
  row.default_ms /= n;
  return row;
}

}  // namespace pqo::eval
