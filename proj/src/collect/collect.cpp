#include "pqo/collect/collect.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "pqo/core/error.hpp"
#include "pqo/core/json_io.hpp"

namespace pqo::collect {

void CollectionPolicy::validate() const {
  require(repeats >= 1, "repeats must be >= 1");
  require(timeout_slack > 1.0, "timeout slack must be > 1");
  require(plan_cover_epsilon > 0.0, "plan cover epsilon must be > 0");
  require(plan_cover_delta >= 0.0 && plan_cover_delta < 1.0,
          "plan cover delta must be in [0, 1)");
  require(bootstrap_instances >= 1, "bootstrap instance count must be >= 1");
}

std::vector<size_t> tail_reorder_order(const std::vector<double>& default_latencies) {
  std::vector<size_t> order(default_latencies.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return default_latencies[a] > default_latencies[b];
  });
  return order;
}

Workload tail_reorder(const Workload& w, const std::vector<double>& default_latencies) {
  require(w.instances.size() == default_latencies.size(),
          "one default latency per instance required");
  Workload out;
  out.template_id = w.template_id;
  for (size_t i : tail_reorder_order(default_latencies))
    out.instances.push_back(w.instances[i]);
  return out;
}

std::vector<ExecutionRecord> collect_instance(
    const QueryInstance& instance, int64_t instance_index,
    const std::vector<const PlanTree*>& plans, const PlanFingerprint& default_fp,
    const simdb::OptimizerInterface& executor, const CollectionPolicy& policy,
    LatencyHistory& history, const ExecutionRecord* preexecuted_default) {
  policy.validate();

  struct Entry {
    const PlanTree* plan;
    PlanFingerprint fp;
  };
  std::vector<Entry> rest;
  const PlanTree* default_plan = nullptr;
  std::set<PlanFingerprint> seen;
  for (const PlanTree* p : plans) {
    PlanFingerprint fp = plan_fingerprint(*p);
    if (!seen.insert(fp).second) continue;
    if (fp == default_fp) {
      default_plan = p;
    } else {
      rest.push_back({p, fp});
    }
  }
  require(default_plan != nullptr || preexecuted_default != nullptr,
          "default plan missing from the plan list");

  // ascending historical latency, unseen plans last, ties by fingerprint
  std::stable_sort(rest.begin(), rest.end(), [&](const Entry& a, const Entry& b) {
    const auto ma = history.mean(a.fp);
    const auto mb = history.mean(b.fp);
    if (ma.has_value() != mb.has_value()) return ma.has_value();
    if (ma && mb && *ma != *mb) return *ma < *mb;
    return a.fp < b.fp;
  });

  std::vector<ExecutionRecord> records;
  ExecutionRecord default_record;
  if (preexecuted_default) {
    default_record = *preexecuted_default;
  } else {
    simdb::ExecOptions untimed;
    untimed.repeats = policy.repeats;
    default_record = executor.execute(*default_plan, instance, untimed);
    default_record.instance_index = instance_index;
    history.update(default_fp, estimated_latency(default_record));
    records.push_back(default_record);
  }

  const double default_latency = estimated_latency(default_record);
  const double base_timeout = policy.timeout_slack * default_latency;
  double best = default_latency;

  for (const Entry& e : rest) {
    simdb::ExecOptions opts;
    opts.repeats = policy.repeats;
    opts.timeout_first_ms = base_timeout;
    opts.timeout_rest_ms = policy.timeout_slack * best;
    ExecutionRecord record;
    try {
      record = executor.execute(*e.plan, instance, opts);
    } catch (const std::exception& ex) {
      std::fprintf(stderr, "pqo: skipping plan %s on instance %lld: %s\n",
                   e.fp.to_hex().c_str(), static_cast<long long>(instance_index), ex.what());
      continue;
    }
    record.instance_index = instance_index;
    const double latency = estimated_latency(record);
    history.update(e.fp, latency);
    best = std::min(best, latency);
    records.push_back(std::move(record));
  }
  return records;
}

PlanCover compute_plan_cover(const std::vector<ExecutionRecord>& records,
                             const std::vector<int64_t>& bootstrap_instances,
                             const std::vector<PlanFingerprint>& candidate_plans,
                             double epsilon, double delta) {
  require(epsilon > 0.0, "plan cover epsilon must be > 0");
  require(delta >= 0.0 && delta < 1.0, "plan cover delta must be in [0, 1)");
  require(!bootstrap_instances.empty(), "plan cover needs bootstrap instances");

  const std::set<int64_t> bootstrap(bootstrap_instances.begin(), bootstrap_instances.end());
  const std::set<PlanFingerprint> candidates(candidate_plans.begin(), candidate_plans.end());

  // fastest uncensored latency per bootstrap instance
  std::map<int64_t, double> fastest;
  for (const auto& r : records) {
    if (r.censored || bootstrap.count(r.instance_index) == 0) continue;
    if (candidates.count(r.fingerprint) == 0) continue;
    const double latency = estimated_latency(r);
    auto [it, inserted] = fastest.emplace(r.instance_index, latency);
    if (!inserted) it->second = std::min(it->second, latency);
  }
  for (int64_t i : bootstrap)
    require(fastest.count(i) > 0, "bootstrap instance " + std::to_string(i) +
                                      " has no uncensored record");

  // covered-instance sets per plan
  std::map<PlanFingerprint, std::set<int64_t>> covers;
  for (const auto& r : records) {
    if (r.censored || bootstrap.count(r.instance_index) == 0) continue;
    if (candidates.count(r.fingerprint) == 0) continue;
    if (estimated_latency(r) <= (1.0 + epsilon) * fastest.at(r.instance_index) + 1e-12)
      covers[r.fingerprint].insert(r.instance_index);
  }

  const double need = (1.0 - delta) * static_cast<double>(bootstrap.size());
  std::set<int64_t> covered;
  PlanCover cover;
  while (static_cast<double>(covered.size()) + 1e-9 < need) {
    PlanFingerprint best_fp;
    size_t best_gain = 0;
    bool found = false;
    for (const auto& [fp, instances] : covers) {  // fingerprint order breaks ties
      if (cover.covered_instances.count(fp) > 0) continue;
      size_t gain = 0;
      for (int64_t i : instances)
        if (covered.count(i) == 0) ++gain;
      if (gain > best_gain) {
        best_gain = gain;
        best_fp = fp;
        found = true;
      }
    }
    if (!found) {
      std::string uncovered;
      for (int64_t i : bootstrap)
        if (covered.count(i) == 0) uncovered += " " + std::to_string(i);
      fail("plan cover cannot reach coverage " + std::to_string(1.0 - delta) +
           "; uncovered instances:" + uncovered);
    }
    const auto& instances = covers.at(best_fp);
    cover.plans.push_back(best_fp);
    cover.covered_instances[best_fp] =
        std::vector<int64_t>(instances.begin(), instances.end());
    covered.insert(instances.begin(), instances.end());
  }
  cover.coverage = static_cast<double>(covered.size()) / static_cast<double>(bootstrap.size());
  return cover;
}

std::pair<ExecutionDataset, PlanCover> collect_training_data(
    const Workload& w, const rce::CandidateSet& candidates,
    const simdb::OptimizerInterface& executor, const CollectionPolicy& policy,
    const Provenance& provenance, CollectReport* report) {
  policy.validate();
  require(!candidates.candidates.empty(), "candidate set must be non-empty");
  require(!w.instances.empty(), "workload must be non-empty");

  const size_t n = w.instances.size();
  const size_t n_boot = std::min<size_t>(static_cast<size_t>(policy.bootstrap_instances), n);

  ExecutionDataset ds;
  ds.template_id = w.template_id;
  ds.provenance = provenance;
  for (const auto& c : candidates.candidates) ds.plans.emplace(c.fingerprint, c.plan);

  LatencyHistory history;

  // phase 1: default plans, untimed
  std::vector<PlanTree> default_plans(n);
  std::vector<ExecutionRecord> default_records(n);
  std::vector<double> default_latencies(n);
  for (size_t i = 0; i < n; ++i) {
    default_plans[i] = executor.plan(w.instances[i], RowCountMap{});
    const PlanFingerprint fp = plan_fingerprint(default_plans[i]);
    ds.default_plans.push_back(fp);
    if (ds.plans.count(fp) == 0) ds.plans.emplace(fp, default_plans[i]);
    simdb::ExecOptions untimed;
    untimed.repeats = policy.repeats;
    ExecutionRecord r = executor.execute(default_plans[i], w.instances[i], untimed);
    r.instance_index = static_cast<int64_t>(i);
    default_latencies[i] = estimated_latency(r);
    history.update(fp, default_latencies[i]);
    default_records[i] = r;
    ds.records.push_back(std::move(r));
  }

  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (policy.tail_reorder) order = tail_reorder_order(default_latencies);

  std::vector<const PlanTree*> all_plans;
  std::vector<PlanFingerprint> all_fps;
  for (const auto& c : candidates.candidates) {
    all_plans.push_back(&ds.plans.at(c.fingerprint));
    all_fps.push_back(c.fingerprint);
  }

  // phase 2: full matrix over the bootstrap prefix
  std::vector<int64_t> bootstrap_ids;
  for (size_t k = 0; k < n_boot; ++k) {
    const size_t i = order[k];
    bootstrap_ids.push_back(static_cast<int64_t>(i));
    auto records = collect_instance(w.instances[i], static_cast<int64_t>(i), all_plans,
                                    ds.default_plans[i], executor, policy, history,
                                    &default_records[i]);
    for (auto& r : records) ds.records.push_back(std::move(r));
  }

  PlanCover cover = compute_plan_cover(ds.records, bootstrap_ids, all_fps,
                                       policy.plan_cover_epsilon, policy.plan_cover_delta);
  ds.plan_cover = cover.plans;

  // phase 3: remaining instances run the pruned set (cover plus default)
  for (size_t k = n_boot; k < n; ++k) {
    const size_t i = order[k];
    std::vector<const PlanTree*> pruned;
    for (const auto& fp : cover.plans) pruned.push_back(&ds.plans.at(fp));
    pruned.push_back(&ds.plans.at(ds.default_plans[i]));
    auto records = collect_instance(w.instances[i], static_cast<int64_t>(i), pruned,
                                    ds.default_plans[i], executor, policy, history,
                                    &default_records[i]);
    for (auto& r : records) ds.records.push_back(std::move(r));
  }

  ds.validate();

  if (report) {
    report->instances = n;
    report->bootstrap_count = n_boot;
    report->reordered = policy.tail_reorder;
    report->plan_executions = ds.records.size();
    report->total_runs = 0;
    report->censored_records = 0;
    report->runs_saved_by_censoring = 0;
    for (const auto& r : ds.records) {
      report->total_runs += r.latencies_ms.size();
      if (r.latencies_ms.size() < static_cast<size_t>(policy.repeats))
        report->runs_saved_by_censoring +=
            static_cast<size_t>(policy.repeats) - r.latencies_ms.size();
      if (r.censored) ++report->censored_records;
    }
    report->cover_size = cover.plans.size();
    report->coverage = cover.coverage;
  }
  return {std::move(ds), std::move(cover)};
}

void save_report(const CollectReport& report, const std::string& path) {
  Json j;
  j["format_version"] = 1;
  j["kind"] = "collect_report";
  j["instances"] = report.instances;
  j["bootstrap_instances"] = report.bootstrap_count;
  j["tail_reordered"] = report.reordered;
  j["plan_executions"] = report.plan_executions;
  j["total_runs"] = report.total_runs;
  j["censored_records"] = report.censored_records;
  j["runs_saved_by_censoring"] = report.runs_saved_by_censoring;
  j["plan_cover_size"] = report.cover_size;
  j["plan_cover_coverage"] = report.coverage;
  write_file(path, j.dump() + "\n");
}

}  // namespace pqo::collect
