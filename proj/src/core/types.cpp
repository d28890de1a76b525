#include "pqo/core/types.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <map>
#include <set>

#include "pqo/core/rng.hpp"

namespace pqo {

std::string to_string(ParamType t) {
  switch (t) {
    case ParamType::Int: return "int";
    case ParamType::Float: return "float";
    case ParamType::String: return "string";
    case ParamType::Date: return "date";
  }
  fail("unknown param type");
}

ParamType param_type_from_string(const std::string& s) {
  if (s == "int") return ParamType::Int;
  if (s == "float") return ParamType::Float;
  if (s == "string") return ParamType::String;
  if (s == "date") return ParamType::Date;
  fail("unknown param type: " + s);
}

int64_t days_from_civil(int y, unsigned m, unsigned d) {
  y -= m <= 2;
  const int era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097LL + static_cast<int64_t>(doe) - 719468;
}

void civil_from_days(int64_t z, int& year, unsigned& month, unsigned& day) {
  z += 719468;
  const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  const int64_t y = static_cast<int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  day = doy - (153 * mp + 2) / 5 + 1;
  month = mp + (mp < 10 ? 3 : -9);
  year = static_cast<int>(y + (month <= 2));
}

int64_t parse_date(const std::string& iso) {
  int y = 0;
  unsigned m = 0, d = 0;
  if (std::sscanf(iso.c_str(), "%d-%u-%u", &y, &m, &d) != 3 || m < 1 || m > 12 || d < 1 ||
      d > 31) {
    fail("bad date literal: " + iso);
  }
  return days_from_civil(y, m, d);
}

std::string format_date(int64_t days) {
  int y;
  unsigned m, d;
  civil_from_days(days, y, m, d);
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", y, m, d);
  return buf;
}

std::string to_string(PredicateOp op) {
  switch (op) {
    case PredicateOp::Eq: return "eq";
    case PredicateOp::Le: return "le";
    case PredicateOp::Ge: return "ge";
  }
  fail("unknown predicate op");
}

PredicateOp predicate_op_from_string(const std::string& s) {
  if (s == "eq") return PredicateOp::Eq;
  if (s == "le") return PredicateOp::Le;
  if (s == "ge") return PredicateOp::Ge;
  fail("unknown predicate op: " + s);
}

bool QueryTemplate::has_table(const std::string& t) const {
  return std::find(tables.begin(), tables.end(), t) != tables.end();
}

void QueryTemplate::validate() const {
  require(!template_id.empty(), "template_id must be non-empty");
  require(tables.size() >= 1, "template needs at least one table");
  require(param_specs.size() >= 1, "template needs m >= 1 parameters");
  std::set<std::string> seen(tables.begin(), tables.end());
  require(seen.size() == tables.size(), "duplicate table in template");

  for (const auto& e : join_graph) {
    require(has_table(e.table1) && has_table(e.table2),
            "join edge references unknown table");
    require(e.table1 != e.table2, "self-join edge not supported");
  }

  // connectivity over the join graph
  if (tables.size() > 1) {
    std::map<std::string, int> idx;
    for (size_t i = 0; i < tables.size(); ++i) idx[tables[i]] = static_cast<int>(i);
    std::vector<int> parent(tables.size());
    for (size_t i = 0; i < parent.size(); ++i) parent[i] = static_cast<int>(i);
    auto find = [&](int x) {
      while (parent[static_cast<size_t>(x)] != x) {
        parent[static_cast<size_t>(x)] = parent[static_cast<size_t>(parent[static_cast<size_t>(x)])];
        x = parent[static_cast<size_t>(x)];
      }
      return x;
    };
    for (const auto& e : join_graph) parent[static_cast<size_t>(find(idx[e.table1]))] = find(idx[e.table2]);
    const int root = find(0);
    for (size_t i = 1; i < tables.size(); ++i)
      require(find(static_cast<int>(i)) == root, "join graph is not connected");
  }

  // every slot index in [0, m) appears exactly once across predicates
  std::vector<int> slot_uses(param_specs.size(), 0);
  for (const auto& p : predicates) {
    require(has_table(p.table), "predicate references unknown table: " + p.table);
    require(p.param_slot >= 0 && static_cast<size_t>(p.param_slot) < param_specs.size(),
            "predicate slot out of range");
    slot_uses[static_cast<size_t>(p.param_slot)]++;
  }
  for (size_t i = 0; i < slot_uses.size(); ++i)
    require(slot_uses[i] == 1, "parameter slot " + std::to_string(i) +
                                   " must appear exactly once, found " +
                                   std::to_string(slot_uses[i]));
}

void QueryInstance::validate_against(const QueryTemplate& tmpl) const {
  require(template_id == tmpl.template_id, "instance/template id mismatch");
  require(bindings.size() == tmpl.param_specs.size(), "binding count mismatch");
  for (size_t i = 0; i < bindings.size(); ++i)
    require(bindings[i].type == tmpl.param_specs[i].type,
            "binding type mismatch at slot " + std::to_string(i));
}

uint64_t QueryInstance::content_hash() const {
  uint64_t h = fnv1a64(template_id);
  for (const auto& b : bindings) {
    h = hash_combine(h, static_cast<uint64_t>(b.type));
    h = hash_combine(h, static_cast<uint64_t>(b.i));
    uint64_t fb = 0;
    static_assert(sizeof(fb) == sizeof(b.f));
    std::memcpy(&fb, &b.f, sizeof(fb));
    h = hash_combine(h, fb);
    h = hash_combine(h, fnv1a64(b.s));
  }
  return h;
}

void Workload::validate() const {
  for (const auto& q : instances)
    require(q.template_id == template_id, "workload instance template mismatch");
}

std::pair<std::vector<size_t>, std::vector<size_t>> split_indices(size_t n,
                                                                  double train_fraction,
                                                                  uint64_t seed) {
  require(train_fraction > 0.0 && train_fraction < 1.0, "train_fraction must be in (0, 1)");
  require(n > 0, "cannot split an empty workload");

  size_t train_size =
      static_cast<size_t>(std::llround(train_fraction * static_cast<double>(n)));
  if (train_size > n) train_size = n;
  if (n == 1 || train_size == n || train_size == 0) {
    std::fprintf(stderr, "pqo: degenerate workload split (%zu/%zu of %zu)\n", train_size,
                 n - train_size, n);
  }

  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(hash_combine(seed, fnv1a64("split_workload")));
  rng.shuffle(order);

  std::vector<bool> in_train(n, false);
  for (size_t i = 0; i < train_size; ++i) in_train[order[i]] = true;

  std::vector<size_t> train, test;
  for (size_t i = 0; i < n; ++i) (in_train[i] ? train : test).push_back(i);
  return {train, test};
}

std::pair<Workload, Workload> split_workload(const Workload& w, double train_fraction,
                                             uint64_t seed) {
  auto [train_idx, test_idx] = split_indices(w.instances.size(), train_fraction, seed);
  Workload train{w.template_id, {}}, test{w.template_id, {}};
  for (size_t i : train_idx) train.instances.push_back(w.instances[i]);
  for (size_t i : test_idx) test.instances.push_back(w.instances[i]);
  return {train, test};
}

}  // namespace pqo
