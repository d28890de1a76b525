#include "pqo/simdb/cost.hpp"

#include <cmath>

#include "pqo/core/error.hpp"
#include "pqo/core/rng.hpp"

namespace pqo::simdb {

void CostModel::validate() const {
  const double coeffs[] = {seq_scan_per_row, index_fixed,     index_per_row,
                           output_per_row,   hash_fixed,      hash_build_per_row,
                           hash_probe_per_row, merge_per_row, merge_sort_factor,
                           nl_outer_per_row, nl_per_pair};
  for (double c : coeffs) require(c > 0.0, "cost coefficients must be > 0");
  const double d[] = {distortion_seq, distortion_index, distortion_hash, distortion_merge,
                      distortion_nl};
  for (double x : d) require(x > 0.0, "distortion factors must be > 0");
}

double CostModel::scan_cost(ScanOp op, double base_rows, double out_rows) const {
  const double out = output_per_row * out_rows;
  switch (op) {
    case ScanOp::SeqScan:
      return seq_scan_per_row * base_rows + out;
    case ScanOp::IndexScan:
      return index_fixed + index_per_row * out_rows + out;
  }
  fail("unknown scan op");
}

double CostModel::join_cost(JoinOp op, double l, double r, double out_rows) const {
  const double out = output_per_row * out_rows;
  switch (op) {
    case JoinOp::HashJoin:
      return hash_fixed + hash_build_per_row * l + hash_probe_per_row * r + out;
    case JoinOp::NestedLoop:
      return nl_outer_per_row * l + nl_per_pair * l * r + out;
    case JoinOp::MergeJoin:
      return merge_per_row * (l + r) +
             merge_sort_factor * (l * std::log2(1.0 + l) + r * std::log2(1.0 + r)) + out;
  }
  fail("unknown join op");
}

double CostModel::distortion(ScanOp op) const {
  return op == ScanOp::SeqScan ? distortion_seq : distortion_index;
}

double CostModel::distortion(JoinOp op) const {
  switch (op) {
    case JoinOp::HashJoin: return distortion_hash;
    case JoinOp::NestedLoop: return distortion_nl;
    case JoinOp::MergeJoin: return distortion_merge;
  }
  fail("unknown join op");
}

CostModel with_seeded_distortion(CostModel base, uint64_t seed, double lo, double hi) {
  require(lo > 0.0 && hi >= lo, "distortion range must be positive");
  Rng rng(hash_combine(seed, fnv1a64("distortion")));
  auto draw = [&] { return std::exp(rng.uniform(std::log(lo), std::log(hi))); };
  base.distortion_seq = draw();
  base.distortion_index = draw();
  base.distortion_hash = draw();
  base.distortion_merge = draw();
  base.distortion_nl = draw();
  base.validate();
  return base;
}

}  // namespace pqo::simdb
