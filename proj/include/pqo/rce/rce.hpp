#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pqo/core/rng.hpp"
#include "pqo/core/rowcount.hpp"
#include "pqo/simdb/optimizer.hpp"

namespace pqo::rce {

struct RceParams {
  int generations = 3;              // G
  double exponent_base = 10.0;      // b
  int exponent_range = 2;           // m
  int samples_per_generation = 20;  // S
  int perturbations_per_plan = 20;  // N
  int subplan_perturbation_limit = 5;
  int per_instance_plan_limit = 200;
  int total_plan_limit = 2000;
  uint64_t seed = 0;

  void validate() const;
};

struct Candidate {
  PlanTree plan;
  RowCountMap row_counts;                 // the overrides that produced the plan
  PlanFingerprint fingerprint;
  int generation = 0;
  std::optional<PlanFingerprint> parent;  // empty for generation 0
  int64_t source_instance = -1;           // workload position whose evolution found it
};

struct CandidateSet {
  std::string template_id;
  std::vector<Candidate> candidates;               // insertion order
  std::map<PlanFingerprint, size_t> by_fingerprint;

  bool contains(const PlanFingerprint& fp) const { return by_fingerprint.count(fp) > 0; }
  const Candidate& at(const PlanFingerprint& fp) const {
    return candidates[by_fingerprint.at(fp)];
  }
  size_t size() const { return candidates.size(); }

  // false if the fingerprint was already present (global dedup)
  bool add(Candidate c);
};

// The 2m+1 candidate row counts for one sub-plan: w scaled by b^e over the
// exponent grid e in {e_l, e_l+1, ..., e_l+2m} with e_l = -min(log_b w, m),
// floored and clamped to >= 1.
std::vector<int64_t> perturbation_candidates(double estimated_rows, double base, int range);

// One perturbation pass over the join sub-plans appearing in `plan` (Alg. 1
// lines 21-28). Keys at their perturbation limit and keys absent from the
// plan are inherited unchanged.
RowCountMap sample_perturbations(const PlanTree& plan, const RowCountMap& current,
                                 const RceParams& params, Rng& rng);

CandidateSet row_count_evolution(const QueryInstance& instance,
                                 const simdb::OptimizerInterface& optimizer,
                                 const RceParams& params, Rng& rng,
                                 int64_t source_instance = 0);

// Union over the workload with global dedup; after total_plan_limit is hit,
// remaining instances contribute only their default plans (soft limit).
CandidateSet workload_candidate_generation(const Workload& w,
                                           const simdb::OptimizerInterface& optimizer,
                                           const RceParams& params, int jobs = 1);

// Candidate-set JSONL persistence (header + one line per candidate).
void save_candidates(const CandidateSet& cs, const std::string& path);
CandidateSet load_candidates(const std::string& path);

}  // namespace pqo::rce
