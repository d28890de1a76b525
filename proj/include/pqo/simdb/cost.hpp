#pragma once

#include "pqo/core/plan.hpp"

namespace pqo::simdb {

// C_out-style cost: every node pays an output term plus operator-specific
// input terms. The distortion factors skew latency away from cost per
// operator and are invisible to the planner.
struct CostModel {
  double seq_scan_per_row = 0.01;
  double index_fixed = 1.0;
  double index_per_row = 0.02;
  double output_per_row = 0.01;

  double hash_fixed = 5.0;
  double hash_build_per_row = 0.03;
  double hash_probe_per_row = 0.02;
  double merge_per_row = 0.006;
  double merge_sort_factor = 0.0015;
  double nl_outer_per_row = 0.001;
  double nl_per_pair = 0.0004;

  double distortion_seq = 1.0;
  double distortion_index = 1.0;
  double distortion_hash = 1.0;
  double distortion_merge = 1.0;
  double distortion_nl = 1.0;

  void validate() const;

  double scan_cost(ScanOp op, double base_rows, double out_rows) const;
  double join_cost(JoinOp op, double left_rows, double right_rows, double out_rows) const;

  double distortion(ScanOp op) const;
  double distortion(JoinOp op) const;
};

// Seeded per-operator distortion in [lo, hi], log-uniform.
CostModel with_seeded_distortion(CostModel base, uint64_t seed, double lo, double hi);

}  // namespace pqo::simdb
