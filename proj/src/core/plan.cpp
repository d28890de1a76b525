#include "pqo/core/plan.hpp"

#include <algorithm>
#include <cstdio>
#include <set>

#include "pqo/core/error.hpp"
#include "pqo/core/rng.hpp"

namespace pqo {

std::string to_string(ScanOp op) {
  switch (op) {
    case ScanOp::SeqScan: return "SeqScan";
    case ScanOp::IndexScan: return "IndexScan";
  }
  fail("unknown scan op");
}

std::string to_string(JoinOp op) {
  switch (op) {
    case JoinOp::HashJoin: return "HashJoin";
    case JoinOp::NestedLoop: return "NestedLoop";
    case JoinOp::MergeJoin: return "MergeJoin";
  }
  fail("unknown join op");
}

ScanOp scan_op_from_string(const std::string& s) {
  if (s == "SeqScan") return ScanOp::SeqScan;
  if (s == "IndexScan") return ScanOp::IndexScan;
  fail("unknown scan op: " + s);
}

JoinOp join_op_from_string(const std::string& s) {
  if (s == "HashJoin") return JoinOp::HashJoin;
  if (s == "NestedLoop") return JoinOp::NestedLoop;
  if (s == "MergeJoin") return JoinOp::MergeJoin;
  fail("unknown join op: " + s);
}

SubPlanKey::SubPlanKey(std::vector<std::string> t) : tables(std::move(t)) {
  std::sort(tables.begin(), tables.end());
  tables.erase(std::unique(tables.begin(), tables.end()), tables.end());
}

bool SubPlanKey::contains(const std::string& t) const {
  return std::binary_search(tables.begin(), tables.end(), t);
}

bool SubPlanKey::is_subset_of(const SubPlanKey& o) const {
  return std::includes(o.tables.begin(), o.tables.end(), tables.begin(), tables.end());
}

bool SubPlanKey::intersects(const SubPlanKey& o) const {
  for (const auto& t : tables)
    if (o.contains(t)) return true;
  return false;
}

SubPlanKey SubPlanKey::union_of(const SubPlanKey& a, const SubPlanKey& b) {
  std::vector<std::string> merged;
  std::set_union(a.tables.begin(), a.tables.end(), b.tables.begin(), b.tables.end(),
                 std::back_inserter(merged));
  SubPlanKey k;
  k.tables = std::move(merged);
  return k;
}

std::string SubPlanKey::to_string() const {
  std::string out;
  for (size_t i = 0; i < tables.size(); ++i) {
    if (i) out += '+';
    out += tables[i];
  }
  return out;
}

SubPlanKey SubPlanKey::parse(const std::string& s) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : s) {
    if (c == '+') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) parts.push_back(cur);
  return SubPlanKey(std::move(parts));
}

SubPlanKey PlanTree::table_set(int32_t i) const {
  const PlanNode& n = node(i);
  if (n.is_leaf) return SubPlanKey({n.table});
  return SubPlanKey::union_of(table_set(n.left), table_set(n.right));
}

std::vector<SubPlanKey> PlanTree::join_subplans() const {
  std::vector<SubPlanKey> keys;
  for (int32_t i = 0; i < static_cast<int32_t>(nodes.size()); ++i) {
    if (!node(i).is_leaf) keys.push_back(table_set(i));
  }
  std::sort(keys.begin(), keys.end());
  keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
  return keys;
}

void PlanTree::validate() const {
  require(root >= 0 && static_cast<size_t>(root) < nodes.size(), "plan has no root");
  std::set<std::string> leaves;
  size_t visited = 0;
  auto walk = [&](auto&& self, int32_t i) -> SubPlanKey {
    require(i >= 0 && static_cast<size_t>(i) < nodes.size(), "plan child index out of range");
    ++visited;
    const PlanNode& n = node(i);
    if (n.is_leaf) {
      require(!n.table.empty(), "leaf without a table");
      require(leaves.insert(n.table).second, "duplicate leaf table: " + n.table);
      return SubPlanKey({n.table});
    }
    SubPlanKey l = self(self, n.left);
    SubPlanKey r = self(self, n.right);
    require(!l.intersects(r), "join children overlap");
    return SubPlanKey::union_of(l, r);
  };
  walk(walk, root);
  require(visited == nodes.size(), "plan contains unreachable nodes");
}

void PlanTree::validate_against(const QueryTemplate& tmpl) const {
  validate();
  SubPlanKey all = table_set();
  require(all.tables.size() == tmpl.tables.size(), "plan does not cover all template tables");
  for (const auto& t : tmpl.tables)
    require(all.contains(t), "plan is missing template table: " + t);
}

PlanTree PlanTree::leaf(const std::string& table, ScanOp op, double card) {
  PlanTree p;
  p.nodes.push_back(PlanNode{true, op, table, JoinOp::HashJoin, -1, -1, card});
  p.root = 0;
  return p;
}

PlanTree PlanTree::join(JoinOp op, PlanTree left, PlanTree right, double card) {
  PlanTree p = std::move(left);
  const int32_t offset = static_cast<int32_t>(p.nodes.size());
  for (auto n : right.nodes) {
    if (!n.is_leaf) {
      n.left += offset;
      n.right += offset;
    }
    p.nodes.push_back(std::move(n));
  }
  const int32_t lroot = p.root;
  const int32_t rroot = right.root + offset;
  p.nodes.push_back(PlanNode{false, ScanOp::SeqScan, {}, op, lroot, rroot, card});
  p.root = static_cast<int32_t>(p.nodes.size()) - 1;
  return p;
}

namespace {

void canonical_walk(const PlanTree& plan, int32_t i, std::string& out) {
  const PlanNode& n = plan.node(i);
  if (n.is_leaf) {
    out += "S(";
    out += to_string(n.scan);
    out += ',';
    out += n.table;
    out += ')';
    return;
  }
  out += "J(";
  out += to_string(n.join);
  out += ",[";
  out += plan.table_set(n.left).to_string();
  out += "],[";
  out += plan.table_set(n.right).to_string();
  out += "])";
  canonical_walk(plan, n.left, out);
  canonical_walk(plan, n.right, out);
}

}  // namespace

std::string canonical_plan_string(const PlanTree& plan) {
  plan.validate();
  std::string out;
  canonical_walk(plan, plan.root, out);
  return out;
}

std::string PlanFingerprint::to_hex() const {
  char buf[33];
  std::snprintf(buf, sizeof(buf), "%016llx%016llx", static_cast<unsigned long long>(hi),
                static_cast<unsigned long long>(lo));
  return buf;
}

PlanFingerprint PlanFingerprint::from_hex(const std::string& s) {
  require(s.size() == 32, "fingerprint hex must be 32 chars");
  PlanFingerprint fp;
  fp.hi = std::stoull(s.substr(0, 16), nullptr, 16);
  fp.lo = std::stoull(s.substr(16, 16), nullptr, 16);
  return fp;
}

PlanFingerprint plan_fingerprint(const PlanTree& plan) {
  const std::string canon = canonical_plan_string(plan);
  PlanFingerprint fp;
  fp.hi = fnv1a64(canon);
  fp.lo = fnv1a64(canon, splitmix64(kFnvOffset));
  return fp;
}

}  // namespace pqo
