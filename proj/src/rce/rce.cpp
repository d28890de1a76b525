#include "pqo/rce/rce.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <thread>

#include "pqo/core/error.hpp"
#include "pqo/core/json_io.hpp"

namespace pqo::rce {

void RceParams::validate() const {
  require(generations >= 0, "generations must be >= 0");
  require(exponent_base > 1.0, "exponent base must be > 1");
  require(exponent_range >= 1, "exponent range must be >= 1");
  require(samples_per_generation >= 1, "samples per generation must be >= 1");
  require(perturbations_per_plan >= 1, "perturbations per plan must be >= 1");
  require(subplan_perturbation_limit >= 1, "sub-plan perturbation limit must be >= 1");
  require(per_instance_plan_limit >= 1, "per-instance plan limit must be >= 1");
  require(total_plan_limit >= 1, "total plan limit must be >= 1");
}

bool CandidateSet::add(Candidate c) {
  if (by_fingerprint.count(c.fingerprint) > 0) return false;
  by_fingerprint.emplace(c.fingerprint, candidates.size());
  candidates.push_back(std::move(c));
  return true;
}

std::vector<int64_t> perturbation_candidates(double estimated_rows, double base, int range) {
  require(base > 1.0, "exponent base must be > 1");
  require(range >= 1, "exponent range must be >= 1");
  const double w = estimated_rows > 0.0 ? estimated_rows : 1.0;
  const double e_lower = -std::min(std::log(w) / std::log(base), static_cast<double>(range));
  std::vector<int64_t> candidates;
  candidates.reserve(static_cast<size_t>(2 * range + 1));
  for (int step = 0; step <= 2 * range; ++step) {
    const double factor = std::pow(base, e_lower + static_cast<double>(step));
    const double scaled = std::floor(w * factor);
    candidates.push_back(std::max<int64_t>(1, static_cast<int64_t>(scaled)));
  }
  return candidates;
}

RowCountMap sample_perturbations(const PlanTree& plan, const RowCountMap& current,
                                 const RceParams& params, Rng& rng) {
  params.validate();
  RowCountMap next = current;

  // estimated cardinality per join sub-plan, as annotated on the plan
  std::map<SubPlanKey, double> estimates;
  for (int32_t i = 0; i < static_cast<int32_t>(plan.nodes.size()); ++i) {
    if (plan.node(i).is_leaf) continue;
    estimates[plan.table_set(i)] = plan.node(i).estimated_cardinality;
  }

  for (const auto& [key, w] : estimates) {
    if (next.perturbation_count(key) >= params.subplan_perturbation_limit) continue;
    const auto grid = perturbation_candidates(w, params.exponent_base, params.exponent_range);
    const size_t pick = static_cast<size_t>(rng.uniform_int(grid.size()));
    next.set(key, grid[pick]);
    next.perturbations[key] = next.perturbation_count(key) + 1;
  }
  return next;
}

CandidateSet row_count_evolution(const QueryInstance& instance,
                                 const simdb::OptimizerInterface& optimizer,
                                 const RceParams& params, Rng& rng, int64_t source_instance) {
  params.validate();
  CandidateSet set;
  set.template_id = instance.template_id;

  Candidate base;
  base.plan = optimizer.plan(instance, RowCountMap{});
  base.fingerprint = plan_fingerprint(base.plan);
  base.generation = 0;
  base.source_instance = source_instance;
  set.add(std::move(base));

  std::vector<size_t> previous_generation = {0};
  bool limit_reached = false;

  for (int g = 1; g <= params.generations && !limit_reached; ++g) {
    // sample up to S parents uniformly without replacement
    std::vector<size_t> parents = previous_generation;
    rng.shuffle(parents);
    if (parents.size() > static_cast<size_t>(params.samples_per_generation))
      parents.resize(static_cast<size_t>(params.samples_per_generation));

    std::vector<size_t> next_generation;
    for (size_t parent_idx : parents) {
      for (int i = 0; i < params.perturbations_per_plan; ++i) {
        if (set.size() >= static_cast<size_t>(params.per_instance_plan_limit)) {
          limit_reached = true;
          break;
        }
        const Candidate& parent = set.candidates[parent_idx];
        RowCountMap perturbed =
            sample_perturbations(parent.plan, parent.row_counts, params, rng);
        Candidate child;
        child.plan = optimizer.plan(instance, perturbed);
        child.fingerprint = plan_fingerprint(child.plan);
        child.row_counts = std::move(perturbed);
        child.generation = g;
        child.parent = parent.fingerprint;
        child.source_instance = source_instance;
        const size_t index = set.size();
        if (set.add(std::move(child))) next_generation.push_back(index);
      }
      if (limit_reached) break;
    }
    if (next_generation.empty()) break;  // nothing unseen, later samples would repeat
    previous_generation = std::move(next_generation);
  }
  return set;
}

CandidateSet workload_candidate_generation(const Workload& w,
                                           const simdb::OptimizerInterface& optimizer,
                                           const RceParams& params, int jobs) {
  params.validate();
  require(!w.instances.empty(), "workload must be non-empty");
  require(jobs >= 1, "jobs must be >= 1");

  const size_t n = w.instances.size();
  std::vector<CandidateSet> per_instance(n);

  // Per-instance evolution is independent; the merge below is sequential in
  // workload order, so results do not depend on the worker count.
  auto run_instance = [&](size_t i) {
    Rng rng(hash_combine(params.seed, hash_combine(fnv1a64("rce"), static_cast<uint64_t>(i))));
    per_instance[i] =
        row_count_evolution(w.instances[i], optimizer, params, rng, static_cast<int64_t>(i));
  };

  if (jobs == 1) {
    for (size_t i = 0; i < n; ++i) run_instance(i);
  } else {
    std::vector<std::thread> workers;
    std::atomic<size_t> cursor{0};
    const size_t worker_count = std::min<size_t>(static_cast<size_t>(jobs), n);
    for (size_t t = 0; t < worker_count; ++t) {
      workers.emplace_back([&] {
        while (true) {
          const size_t i = cursor.fetch_add(1);
          if (i >= n) break;
          run_instance(i);
        }
      });
    }
    for (auto& t : workers) t.join();
  }
  CandidateSet merged;
  merged.template_id = w.template_id;
  bool limit_hit = false;
  for (size_t i = 0; i < n; ++i) {
    const CandidateSet& cs = per_instance[i];
    for (const auto& c : cs.candidates) {
      // past the soft limit, only default plans are kept for the remaining
      // instances; the final full iteration may overshoot
      if (limit_hit && c.generation != 0) continue;
      merged.add(c);
    }
    if (!limit_hit && merged.size() >= static_cast<size_t>(params.total_plan_limit))
      limit_hit = true;
  }
  return merged;
}

namespace {

Json row_counts_to_json(const RowCountMap& m) {
  Json rows = Json::object();
  for (const auto& [key, count] : m.rows) rows[key.to_string()] = count;
  Json perturbations = Json::object();
  for (const auto& [key, count] : m.perturbations) perturbations[key.to_string()] = count;
  return Json{{"rows", rows}, {"perturbations", perturbations}};
}

RowCountMap row_counts_from_json(const Json& j) {
  RowCountMap m;
  for (const auto& [key, count] : j.at("rows").items())
    m.rows[SubPlanKey::parse(key)] = count.get<int64_t>();
  for (const auto& [key, count] : j.at("perturbations").items())
    m.perturbations[SubPlanKey::parse(key)] = count.get<int>();
  m.validate();
  return m;
}

}  // namespace

void save_candidates(const CandidateSet& cs, const std::string& path) {
  Json header;
  header["format_version"] = 1;
  header["kind"] = "candidate_set";
  header["template_id"] = cs.template_id;
  header["count"] = cs.candidates.size();
  std::string out = header.dump();
  out += '\n';
  for (const auto& c : cs.candidates) {
    Json j;
    j["fingerprint"] = c.fingerprint.to_hex();
    j["tree"] = to_json(c.plan);
    j["row_counts"] = row_counts_to_json(c.row_counts);
    j["generation"] = c.generation;
    j["parent"] = c.parent ? Json(c.parent->to_hex()) : Json(nullptr);
    j["source_instance"] = c.source_instance;
    out += j.dump();
    out += '\n';
  }
  write_file(path, out);
}

CandidateSet load_candidates(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  size_t line_no = 0;
  CandidateSet cs;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      Json j = Json::parse(line);
      if (line_no == 1) {
        require(j.at("kind") == "candidate_set", "not a candidate set file");
        require(j.at("format_version").get<int>() == 1, "unsupported candidate format_version");
        cs.template_id = j.at("template_id").get<std::string>();
      } else {
        Candidate c;
        c.fingerprint = PlanFingerprint::from_hex(j.at("fingerprint").get<std::string>());
        c.plan = plan_from_json(j.at("tree"));
        c.row_counts = row_counts_from_json(j.at("row_counts"));
        c.generation = j.at("generation").get<int>();
        if (!j.at("parent").is_null())
          c.parent = PlanFingerprint::from_hex(j.at("parent").get<std::string>());
        c.source_instance = j.at("source_instance").get<int64_t>();
        require(plan_fingerprint(c.plan) == c.fingerprint, "candidate fingerprint mismatch");
        cs.add(std::move(c));
      }
    } catch (const std::exception& e) {
      fail("candidate line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  require(line_no >= 1, "empty candidate file");
  return cs;
}

}  // namespace pqo::rce
