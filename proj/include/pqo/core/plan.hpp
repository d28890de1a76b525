#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pqo/core/types.hpp"

namespace pqo {

enum class ScanOp { SeqScan, IndexScan };
enum class JoinOp { HashJoin, NestedLoop, MergeJoin };

std::string to_string(ScanOp op);
std::string to_string(JoinOp op);
ScanOp scan_op_from_string(const std::string& s);
JoinOp join_op_from_string(const std::string& s);

// Canonical sorted table set; identifies a sub-plan query.
struct SubPlanKey {
  std::vector<std::string> tables;  // sorted, unique

  SubPlanKey() = default;
  explicit SubPlanKey(std::vector<std::string> t);

  size_t size() const { return tables.size(); }
  bool is_join() const { return tables.size() >= 2; }
  bool contains(const std::string& t) const;
  bool is_subset_of(const SubPlanKey& o) const;
  bool intersects(const SubPlanKey& o) const;
  static SubPlanKey union_of(const SubPlanKey& a, const SubPlanKey& b);

  std::string to_string() const;  // "A+B+C"
  static SubPlanKey parse(const std::string& s);

  auto operator<=>(const SubPlanKey&) const = default;
};

struct PlanNode {
  bool is_leaf = true;
  // leaf
  ScanOp scan = ScanOp::SeqScan;
  std::string table;
  // internal
  JoinOp join = JoinOp::HashJoin;
  int32_t left = -1;
  int32_t right = -1;

  double estimated_cardinality = 0.0;
};

// Fully specified physical plan: binary join tree with scan/join operators
// and the cardinality estimates the optimizer used when it built the plan.
struct PlanTree {
  std::vector<PlanNode> nodes;
  int32_t root = -1;

  bool empty() const { return root < 0; }
  const PlanNode& node(int32_t i) const { return nodes[static_cast<size_t>(i)]; }
  PlanNode& node(int32_t i) { return nodes[static_cast<size_t>(i)]; }

  SubPlanKey table_set(int32_t i) const;
  SubPlanKey table_set() const { return table_set(root); }

  // All distinct join sub-plan keys (internal nodes), root included.
  std::vector<SubPlanKey> join_subplans() const;

  // Duplicate/missing-leaf and child-union checks; throws on malformed trees.
  void validate() const;
  void validate_against(const QueryTemplate& tmpl) const;

  static PlanTree leaf(const std::string& table, ScanOp op, double card);
  static PlanTree join(JoinOp op, PlanTree left, PlanTree right, double card);
};

// Pre-order serialization of (operator, sorted child table-sets); cardinality
// annotations are deliberately excluded so they never affect plan identity.
std::string canonical_plan_string(const PlanTree& plan);

struct PlanFingerprint {
  uint64_t hi = 0;
  uint64_t lo = 0;

  auto operator<=>(const PlanFingerprint&) const = default;
  std::string to_hex() const;
  static PlanFingerprint from_hex(const std::string& s);
};

PlanFingerprint plan_fingerprint(const PlanTree& plan);

}  // namespace pqo
