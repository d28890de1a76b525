#include "pqo/simdb/cardinality.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "pqo/core/error.hpp"

namespace pqo::simdb {

int64_t domain_value(const Column& c, const ParamValue& v) {
  switch (v.type) {
    case ParamType::Int:
      return v.i;
    case ParamType::Float:
      return static_cast<int64_t>(std::floor(v.f));
    case ParamType::Date:
      return v.i - c.date_base;
    case ParamType::String: {
      auto it = std::find(c.dict.begin(), c.dict.end(), v.s);
      if (it == c.dict.end()) return -1;  // absent literal selects nothing under Eq
      return static_cast<int64_t>(it - c.dict.begin());
    }
  }
  fail("unknown param type");
}

namespace {

struct BoundPredicate {
  const Column* column;
  PredicateOp op;
  int64_t value;
};

// Per-table predicate list for one instance.
std::map<std::string, std::vector<BoundPredicate>> bind_predicates(
    const Schema& schema, const QueryTemplate& tmpl, const QueryInstance& instance) {
  instance.validate_against(tmpl);
  std::map<std::string, std::vector<BoundPredicate>> bound;
  for (const auto& p : tmpl.predicates) {
    const Column& col = schema.table(p.table).column(p.column);
    const ParamValue& v = instance.bindings[static_cast<size_t>(p.param_slot)];
    bound[p.table].push_back({&col, p.op, domain_value(col, v)});
  }
  return bound;
}

bool row_passes(const std::vector<BoundPredicate>& preds, uint32_t row) {
  for (const auto& p : preds) {
    const int64_t v = static_cast<int64_t>(p.column->values[row]);
    switch (p.op) {
      case PredicateOp::Eq:
        if (v != p.value) return false;
        break;
      case PredicateOp::Le:
        if (v > p.value) return false;
        break;
      case PredicateOp::Ge:
        if (v < p.value) return false;
        break;
    }
  }
  return true;
}

struct JoinContext {
  const Schema* schema;
  const QueryTemplate* tmpl;
  const std::map<std::string, std::vector<BoundPredicate>>* preds;
};

// Message passing over the induced join tree. Returns, for the subtree rooted
// at `t`, the count of joined row combinations grouped by the key value `t`
// exposes toward `parent` (or the total when parent is empty).
std::vector<double> subtree_counts(const JoinContext& ctx, const std::string& t,
                                   const std::string& parent_table,
                                   const std::string& parent_column,
                                   const SubPlanKey& sub,
                                   std::map<std::string, bool>& visited) {
  const Table& table = ctx.schema->table(t);
  visited[t] = true;

  struct ChildEdge {
    const Column* local_key;
    std::vector<double> message;
  };
  std::vector<ChildEdge> children;

  for (const auto& e : ctx.tmpl->join_graph) {
    std::string other, local_col, other_col;
    if (e.table1 == t) {
      other = e.table2;
      local_col = e.column1;
      other_col = e.column2;
    } else if (e.table2 == t) {
      other = e.table1;
      local_col = e.column2;
      other_col = e.column1;
    } else {
      continue;
    }
    if (!sub.contains(other) || other == parent_table) continue;
    require(!visited[other], "induced join graph has a cycle; truth oracle needs a tree");
    ChildEdge child;
    child.local_key = &table.column(local_col);
    child.message = subtree_counts(ctx, other, t, other_col, sub, visited);
    children.push_back(std::move(child));
  }

  const Column* up_key = parent_table.empty() ? nullptr : &table.column(parent_column);
  std::vector<double> out(up_key ? up_key->domain_size : 1, 0.0);

  auto preds_it = ctx.preds->find(t);
  static const std::vector<BoundPredicate> no_preds;
  const auto& preds = preds_it == ctx.preds->end() ? no_preds : preds_it->second;

  for (uint32_t r = 0; r < table.row_count; ++r) {
    if (!row_passes(preds, r)) continue;
    double w = 1.0;
    for (const auto& child : children) {
      const uint32_t key = child.local_key->values[r];
      w *= key < child.message.size() ? child.message[key] : 0.0;
      if (w == 0.0) break;
    }
    if (w == 0.0) continue;
    if (up_key) {
      // parent matches rows whose key equals this row's value in *its* column;
      // both edge endpoints share a domain by construction
      const uint32_t key = table.column(parent_column).values[r];
      if (key < out.size()) out[key] += w;
    } else {
      out[0] += w;
    }
  }
  return out;
}

}  // namespace

int64_t true_cardinality(const Schema& schema, const QueryTemplate& tmpl,
                         const QueryInstance& instance, const SubPlanKey& sub) {
  require(!sub.tables.empty(), "empty sub-plan key");
  for (const auto& t : sub.tables)
    require(tmpl.has_table(t), "sub-plan references unknown table: " + t);

  const auto preds = bind_predicates(schema, tmpl, instance);
  JoinContext ctx{&schema, &tmpl, &preds};

  std::map<std::string, bool> visited;

  double total = 1.0;
  for (const auto& start : sub.tables) {
    if (visited[start]) continue;
    const auto counts = subtree_counts(ctx, start, "", "", sub, visited);
    total *= counts[0];  // disconnected components cross-join
  }
  require(total < 9.0e15, "true cardinality exceeds exact integer range");
  return static_cast<int64_t>(std::llround(total));
}

namespace {

double base_table_estimate(const Schema& schema, const std::string& table,
                           const std::map<std::string, std::vector<BoundPredicate>>& preds) {
  const Table& t = schema.table(table);
  double est = static_cast<double>(t.row_count);
  auto it = preds.find(table);
  if (it == preds.end()) return est;
  for (const auto& p : it->second) {
    const Column& c = *p.column;
    const double n = static_cast<double>(t.row_count);
    double sel = 0.0;
    switch (p.op) {
      case PredicateOp::Eq: {
        const int64_t v = p.value;
        sel = (v >= 0 && v < static_cast<int64_t>(c.domain_size))
                  ? static_cast<double>(c.counts[static_cast<size_t>(v)]) / n
                  : 0.0;
        break;
      }
      case PredicateOp::Le: {
        double acc = 0.0;
        const int64_t hi = std::min<int64_t>(p.value, static_cast<int64_t>(c.domain_size) - 1);
        for (int64_t v = 0; v <= hi; ++v) acc += c.counts[static_cast<size_t>(v)];
        sel = acc / n;
        break;
      }
      case PredicateOp::Ge: {
        double acc = 0.0;
        const int64_t lo = std::max<int64_t>(p.value, 0);
        for (int64_t v = lo; v < static_cast<int64_t>(c.domain_size); ++v)
          acc += c.counts[static_cast<size_t>(v)];
        sel = acc / n;
        break;
      }
    }
    est *= sel;
  }
  return est;
}

}  // namespace

double predicate_selectivity(const Schema& schema, const QueryTemplate& tmpl,
                             const QueryInstance& instance, size_t predicate_index) {
  require(predicate_index < tmpl.predicates.size(), "predicate index out of range");
  const auto& p = tmpl.predicates[predicate_index];
  const Table& t = schema.table(p.table);
  const Column& c = t.column(p.column);
  const int64_t bound =
      domain_value(c, instance.bindings[static_cast<size_t>(p.param_slot)]);
  const double n = static_cast<double>(t.row_count);
  double hits = 0.0;
  switch (p.op) {
    case PredicateOp::Eq:
      if (bound >= 0 && bound < static_cast<int64_t>(c.domain_size))
        hits = c.counts[static_cast<size_t>(bound)];
      break;
    case PredicateOp::Le:
      for (int64_t v = 0; v <= std::min<int64_t>(bound, c.domain_size - 1); ++v)
        hits += c.counts[static_cast<size_t>(v)];
      break;
    case PredicateOp::Ge:
      for (int64_t v = std::max<int64_t>(bound, 0); v < static_cast<int64_t>(c.domain_size);
           ++v)
        hits += c.counts[static_cast<size_t>(v)];
      break;
  }
  return hits / n;
}

int64_t estimate_cardinality(const Schema& schema, const QueryTemplate& tmpl,
                             const QueryInstance& instance, const SubPlanKey& sub,
                             const RowCountMap& overrides) {
  require(!sub.tables.empty(), "empty sub-plan key");
  for (const auto& t : sub.tables)
    require(tmpl.has_table(t), "sub-plan references unknown table: " + t);

  if (auto it = overrides.rows.find(sub); it != overrides.rows.end()) return it->second;

  // Hinted sub-joins contained in `sub` act as fixed blocks: largest first,
  // non-overlapping, estimation continues above them.
  std::vector<const SubPlanKey*> applicable;
  for (const auto& [key, count] : overrides.rows)
    if (key.is_subset_of(sub)) applicable.push_back(&key);
  std::sort(applicable.begin(), applicable.end(), [](const SubPlanKey* a, const SubPlanKey* b) {
    if (a->size() != b->size()) return a->size() > b->size();
    return *a < *b;
  });
  std::vector<const SubPlanKey*> blocks;
  for (const SubPlanKey* key : applicable) {
    bool overlaps = false;
    for (const SubPlanKey* chosen : blocks)
      if (key->intersects(*chosen)) overlaps = true;
    if (!overlaps) blocks.push_back(key);
  }

  const auto preds = bind_predicates(schema, tmpl, instance);

  double est = 1.0;
  for (const SubPlanKey* block : blocks)
    est *= static_cast<double>(overrides.rows.at(*block));

  auto in_some_block = [&](const std::string& t) {
    for (const SubPlanKey* block : blocks)
      if (block->contains(t)) return true;
    return false;
  };
  for (const auto& t : sub.tables)
    if (!in_some_block(t)) est *= base_table_estimate(schema, t, preds);

  for (const auto& e : tmpl.join_graph) {
    if (!sub.contains(e.table1) || !sub.contains(e.table2)) continue;
    bool internal = false;
    for (const SubPlanKey* block : blocks)
      if (block->contains(e.table1) && block->contains(e.table2)) internal = true;
    if (internal) continue;
    const uint32_t ndv1 = schema.table(e.table1).column(e.column1).ndv();
    const uint32_t ndv2 = schema.table(e.table2).column(e.column2).ndv();
    est /= static_cast<double>(std::max<uint32_t>({ndv1, ndv2, 1}));
  }

  if (est < 1.0) return 1;  // the familiar estimate-1 pile-up
  require(est < 9.0e15, "estimated cardinality exceeds integer range");
  return static_cast<int64_t>(std::llround(est));
}

}  // namespace pqo::simdb
