#include "pqo/simdb/planner.hpp"

#include <bit>

#include "pqo/core/error.hpp"

namespace pqo::simdb {

namespace {

struct DpContext {
  const Schema* schema;
  const QueryTemplate* tmpl;
  const CostModel* cost;
  const QueryInstance* instance;
  const RowCountMap* overrides;
  CardinalityMode mode;

  size_t n = 0;
  std::vector<uint32_t> adjacency;          // per table, bitmask of neighbors
  std::vector<SubPlanKey> keys;             // per mask
  std::vector<double> cards;                // per mask
  std::vector<char> connected;              // per mask

  void build() {
    n = tmpl->tables.size();
    require(n >= 1 && n <= 8, "planner supports 1..8 tables");
    adjacency.assign(n, 0);
    auto index_of = [&](const std::string& t) {
      for (size_t i = 0; i < n; ++i)
        if (tmpl->tables[i] == t) return i;
      fail("unknown table in join graph: " + t);
    };
    for (const auto& e : tmpl->join_graph) {
      const size_t a = index_of(e.table1);
      const size_t b = index_of(e.table2);
      adjacency[a] |= 1u << b;
      adjacency[b] |= 1u << a;
    }

    const uint32_t full = (1u << n) - 1u;
    keys.resize(full + 1);
    cards.assign(full + 1, 0.0);
    connected.assign(full + 1, 0);
    CardinalityOracle oracle{schema, tmpl, mode};
    for (uint32_t mask = 1; mask <= full; ++mask) {
      if (!is_connected(mask)) continue;
      connected[mask] = 1;
      std::vector<std::string> tables;
      for (size_t i = 0; i < n; ++i)
        if (mask & (1u << i)) tables.push_back(tmpl->tables[i]);
      keys[mask] = SubPlanKey(std::move(tables));
      cards[mask] =
          static_cast<double>(oracle.cardinality(*instance, keys[mask], *overrides));
    }
  }

  bool is_connected(uint32_t mask) const {
    if (mask == 0) return false;
    const uint32_t start = mask & (~mask + 1u);
    uint32_t reached = start;
    uint32_t frontier = start;
    while (frontier) {
      uint32_t next = 0;
      for (size_t i = 0; i < n; ++i)
        if (frontier & (1u << i)) next |= adjacency[i] & mask;
      next &= ~reached;
      reached |= next;
      frontier = next;
    }
    return reached == mask;
  }

  bool has_cross_edge(uint32_t s, uint32_t t) const {
    for (size_t i = 0; i < n; ++i)
      if (s & (1u << i))
        if (adjacency[i] & t) return true;
    return false;
  }

  bool index_scan_available(const std::string& table) const {
    for (const auto& p : tmpl->predicates)
      if (p.table == table && schema->has_index(p.table, p.column)) return true;
    return false;
  }
};

struct DpEntry {
  bool valid = false;
  double cost = 0.0;
  PlanTree plan;
  PlanFingerprint fp;
};

void consider(DpEntry& best, double cost, PlanTree plan) {
  PlanFingerprint fp = plan_fingerprint(plan);
  if (!best.valid || cost < best.cost || (cost == best.cost && fp < best.fp)) {
    best.valid = true;
    best.cost = cost;
    best.plan = std::move(plan);
    best.fp = fp;
  }
}

}  // namespace

PlanTree plan_query(const Schema& schema, const QueryTemplate& tmpl, const CostModel& cost,
                    const QueryInstance& instance, const RowCountMap& overrides,
                    CardinalityMode mode) {
  tmpl.validate();
  overrides.validate();
  for (const auto& [key, count] : overrides.rows)
    for (const auto& t : key.tables)
      require(tmpl.has_table(t), "override references unknown table: " + t);

  DpContext ctx;
  ctx.schema = &schema;
  ctx.tmpl = &tmpl;
  ctx.cost = &cost;
  ctx.instance = &instance;
  ctx.overrides = &overrides;
  ctx.mode = mode;
  ctx.build();

  const uint32_t full = (1u << ctx.n) - 1u;
  require(ctx.connected[full], "join graph is not connected");

  std::vector<DpEntry> best(full + 1);
  for (size_t i = 0; i < ctx.n; ++i) {
    const uint32_t mask = 1u << i;
    const std::string& table = tmpl.tables[i];
    const double base_rows = static_cast<double>(schema.table(table).row_count);
    consider(best[mask], cost.scan_cost(ScanOp::SeqScan, base_rows, ctx.cards[mask]),
             PlanTree::leaf(table, ScanOp::SeqScan, ctx.cards[mask]));
    if (ctx.index_scan_available(table)) {
      consider(best[mask], cost.scan_cost(ScanOp::IndexScan, base_rows, ctx.cards[mask]),
               PlanTree::leaf(table, ScanOp::IndexScan, ctx.cards[mask]));
    }
  }

  for (uint32_t mask = 1; mask <= full; ++mask) {
    if (!ctx.connected[mask] || std::popcount(mask) < 2) continue;
    for (uint32_t s = (mask - 1u) & mask; s; s = (s - 1u) & mask) {
      const uint32_t t = mask ^ s;
      if (!best[s].valid || !best[t].valid) continue;
      if (!ctx.has_cross_edge(s, t)) continue;
      for (JoinOp op : {JoinOp::HashJoin, JoinOp::NestedLoop, JoinOp::MergeJoin}) {
        const double c = best[s].cost + best[t].cost +
                         cost.join_cost(op, ctx.cards[s], ctx.cards[t], ctx.cards[mask]);
        consider(best[mask], c, PlanTree::join(op, best[s].plan, best[t].plan, ctx.cards[mask]));
      }
    }
  }

  require(best[full].valid, "planner found no plan");
  return best[full].plan;
}

std::vector<PlanTree> enumerate_plans(const Schema& schema, const QueryTemplate& tmpl,
                                      const QueryInstance& instance, CardinalityMode mode) {
  require(tmpl.tables.size() <= 6, "plan enumeration is limited to 6 tables");
  RowCountMap no_overrides;
  CostModel unused;
  DpContext ctx;
  ctx.schema = &schema;
  ctx.tmpl = &tmpl;
  ctx.cost = &unused;
  ctx.instance = &instance;
  ctx.overrides = &no_overrides;
  ctx.mode = mode;
  ctx.build();

  const uint32_t full = (1u << ctx.n) - 1u;
  std::vector<std::vector<PlanTree>> plans(full + 1);

  for (size_t i = 0; i < ctx.n; ++i) {
    const uint32_t mask = 1u << i;
    const std::string& table = tmpl.tables[i];
    plans[mask].push_back(PlanTree::leaf(table, ScanOp::SeqScan, ctx.cards[mask]));
    if (ctx.index_scan_available(table))
      plans[mask].push_back(PlanTree::leaf(table, ScanOp::IndexScan, ctx.cards[mask]));
  }

  for (uint32_t mask = 1; mask <= full; ++mask) {
    if (!ctx.connected[mask] || std::popcount(mask) < 2) continue;
    for (uint32_t s = (mask - 1u) & mask; s; s = (s - 1u) & mask) {
      const uint32_t t = mask ^ s;
      if (plans[s].empty() || plans[t].empty()) continue;
      if (!ctx.has_cross_edge(s, t)) continue;
      for (const auto& l : plans[s])
        for (const auto& r : plans[t])
          for (JoinOp op : {JoinOp::HashJoin, JoinOp::NestedLoop, JoinOp::MergeJoin})
            plans[mask].push_back(PlanTree::join(op, l, r, ctx.cards[mask]));
    }
  }
  return plans[full];
}

double plan_cost(const Schema& schema, const QueryTemplate& tmpl, const CostModel& cost,
                 const QueryInstance& instance, const PlanTree& plan,
                 const RowCountMap& overrides, CardinalityMode mode) {
  plan.validate_against(tmpl);
  CardinalityOracle oracle{&schema, &tmpl, mode};
  auto walk = [&](auto&& self, int32_t i) -> double {
    const PlanNode& node = plan.node(i);
    const SubPlanKey key = plan.table_set(i);
    const double out = static_cast<double>(oracle.cardinality(instance, key, overrides));
    if (node.is_leaf) {
      const double base_rows = static_cast<double>(schema.table(node.table).row_count);
      return cost.scan_cost(node.scan, base_rows, out);
    }
    const double l =
        static_cast<double>(oracle.cardinality(instance, plan.table_set(node.left), overrides));
    const double r =
        static_cast<double>(oracle.cardinality(instance, plan.table_set(node.right), overrides));
    return self(self, node.left) + self(self, node.right) + cost.join_cost(node.join, l, r, out);
  };
  return walk(walk, plan.root);
}

}  // namespace pqo::simdb
