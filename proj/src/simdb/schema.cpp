#include "pqo/simdb/schema.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <sstream>

#include "pqo/core/error.hpp"
#include "pqo/core/json_io.hpp"
#include "pqo/core/rng.hpp"

namespace pqo::simdb {

uint32_t Column::ndv() const {
  uint32_t n = 0;
  for (uint32_t c : counts)
    if (c > 0) ++n;
  return n;
}

void Column::rebuild_counts() {
  counts.assign(domain_size, 0);
  for (uint32_t v : values) {
    require(v < domain_size, "column value outside domain: " + name);
    counts[v]++;
  }
}

const Column& Table::column(const std::string& cname) const {
  for (const auto& c : columns)
    if (c.name == cname) return c;
  fail("unknown column " + name + "." + cname);
}

bool Table::has_column(const std::string& cname) const {
  for (const auto& c : columns)
    if (c.name == cname) return true;
  return false;
}

const Table& Schema::table(const std::string& name) const {
  for (const auto& t : tables)
    if (t.name == name) return t;
  fail("unknown table: " + name);
}

bool Schema::has_index(const std::string& table, const std::string& column) const {
  for (const auto& [t, c] : indexes)
    if (t == table && c == column) return true;
  return false;
}

void Schema::validate() const {
  std::set<std::string> names;
  for (const auto& t : tables) {
    require(t.row_count >= 1, "table row count must be >= 1: " + t.name);
    require(names.insert(t.name).second, "duplicate table: " + t.name);
    for (const auto& c : t.columns) {
      require(c.domain_size >= 1, "column domain must be >= 1");
      require(c.freq.size() == c.domain_size, "frequency model size mismatch");
      require(c.values.size() == t.row_count, "column not materialized: " + c.name);
      double sum = std::accumulate(c.freq.begin(), c.freq.end(), 0.0);
      require(std::abs(sum - 1.0) < 1e-9, "frequency model must sum to 1: " + c.name);
      if (c.type == ParamType::String)
        require(c.dict.size() == c.domain_size, "string column without full dictionary");
    }
  }
  for (const auto& e : edges) {
    table(e.table1).column(e.column1);
    table(e.table2).column(e.column2);
    require(e.true_selectivity > 0.0 && e.true_selectivity <= 1.0,
            "edge selectivity must be in (0, 1]");
  }
  for (const auto& [t, c] : indexes) table(t).column(c);
}

void Schema::finalize() {
  for (auto& t : tables)
    for (auto& c : t.columns) c.rebuild_counts();
  for (auto& e : edges) {
    const Column& a = table(e.table1).column(e.column1);
    const Column& b = table(e.table2).column(e.column2);
    const uint32_t dom = std::min(a.domain_size, b.domain_size);
    double matches = 0.0;
    for (uint32_t v = 0; v < dom; ++v)
      matches += static_cast<double>(a.counts[v]) * static_cast<double>(b.counts[v]);
    const double total = static_cast<double>(table(e.table1).row_count) *
                         static_cast<double>(table(e.table2).row_count);
    e.true_selectivity = matches > 0.0 ? matches / total : 1.0 / total;
  }
  validate();
}

std::vector<double> zipf_frequencies(uint32_t domain_size, double skew) {
  require(domain_size >= 1, "domain size must be >= 1");
  require(skew >= 0.0, "skew must be >= 0");
  std::vector<double> f(domain_size);
  double norm = 0.0;
  for (uint32_t v = 0; v < domain_size; ++v) {
    f[v] = std::pow(static_cast<double>(v + 1), -skew);
    norm += f[v];
  }
  for (auto& x : f) x /= norm;
  return f;
}

std::vector<uint32_t> largest_remainder_counts(uint32_t n, const std::vector<double>& freq) {
  std::vector<uint32_t> counts(freq.size(), 0);
  std::vector<std::pair<double, uint32_t>> remainders;  // (-fraction, index)
  uint64_t assigned = 0;
  for (size_t v = 0; v < freq.size(); ++v) {
    const double exact = freq[v] * static_cast<double>(n);
    counts[v] = static_cast<uint32_t>(std::floor(exact));
    assigned += counts[v];
    remainders.emplace_back(-(exact - std::floor(exact)), static_cast<uint32_t>(v));
  }
  std::sort(remainders.begin(), remainders.end());
  for (size_t k = 0; assigned < n; ++k, ++assigned) counts[remainders[k % remainders.size()].second]++;
  return counts;
}

std::vector<uint32_t> materialize_counts(const std::vector<uint32_t>& counts, uint64_t seed) {
  std::vector<uint32_t> values;
  for (uint32_t v = 0; v < counts.size(); ++v)
    values.insert(values.end(), counts[v], v);
  Rng rng(seed);
  rng.shuffle(values);
  return values;
}

Column make_column(const std::string& name, ParamType type, uint32_t domain_size,
                   const std::vector<double>& freq, uint32_t row_count, uint64_t seed) {
  require(freq.size() == domain_size, "frequency model size mismatch");
  Column c;
  c.name = name;
  c.type = type;
  c.domain_size = domain_size;
  c.freq = freq;
  c.values = materialize_counts(largest_remainder_counts(row_count, freq), seed);
  if (type == ParamType::String) {
    for (uint32_t v = 0; v < domain_size; ++v) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "v%03u", v);
      c.dict.push_back(buf);
    }
  }
  c.rebuild_counts();
  return c;
}

Column make_derived_column(const std::string& name, ParamType type, const Column& source,
                           const std::vector<uint32_t>& value_map) {
  require(value_map.size() == source.domain_size, "value map must cover the source domain");
  Column c;
  c.name = name;
  c.type = type;
  c.domain_size = *std::max_element(value_map.begin(), value_map.end()) + 1;
  c.values.reserve(source.values.size());
  for (uint32_t v : source.values) c.values.push_back(value_map[v]);
  c.rebuild_counts();
  c.freq.assign(c.domain_size, 0.0);
  const double n = static_cast<double>(c.values.size());
  for (uint32_t v = 0; v < c.domain_size; ++v) c.freq[v] = static_cast<double>(c.counts[v]) / n;
  if (type == ParamType::String) {
    for (uint32_t v = 0; v < c.domain_size; ++v) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "v%03u", v);
      c.dict.push_back(buf);
    }
  }
  return c;
}

Column make_column_from_counts(const std::string& name, ParamType type,
                               const std::vector<uint32_t>& counts, uint64_t seed) {
  Column c;
  c.name = name;
  c.type = type;
  c.domain_size = static_cast<uint32_t>(counts.size());
  c.values = materialize_counts(counts, seed);
  const double n = static_cast<double>(c.values.size());
  require(n >= 1.0, "column needs at least one row");
  c.freq.resize(counts.size());
  for (size_t v = 0; v < counts.size(); ++v) c.freq[v] = static_cast<double>(counts[v]) / n;
  if (type == ParamType::String) {
    for (uint32_t v = 0; v < c.domain_size; ++v) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "v%03u", v);
      c.dict.push_back(buf);
    }
  }
  c.rebuild_counts();
  return c;
}

Column make_cyclic_column(const std::string& name, ParamType type, uint32_t domain_size,
                          uint32_t row_count, uint32_t stride) {
  require(stride >= 1, "stride must be >= 1");
  Column c;
  c.name = name;
  c.type = type;
  c.domain_size = domain_size;
  c.values.reserve(row_count);
  for (uint32_t r = 0; r < row_count; ++r) c.values.push_back((r / stride) % domain_size);
  c.rebuild_counts();
  const double n = static_cast<double>(row_count);
  c.freq.resize(domain_size);
  for (uint32_t v = 0; v < domain_size; ++v)
    c.freq[v] = static_cast<double>(c.counts[v]) / n;
  if (type == ParamType::String) {
    for (uint32_t v = 0; v < domain_size; ++v) {
      char buf[16];
      std::snprintf(buf, sizeof(buf), "v%03u", v);
      c.dict.push_back(buf);
    }
  }
  return c;
}

Schema generate_schema(uint64_t seed, int n_tables, double skew) {
  require(n_tables >= 2 && n_tables <= 8, "n_tables must be in [2, 8]");
  require(skew >= 0.0, "skew must be >= 0");

  Schema s;
  s.seed = seed;
  s.skew = skew;
  Rng rng(hash_combine(seed, fnv1a64("generate_schema")));

  const uint32_t key_domain = 64;
  const uint32_t pred_domain = 64;

  std::vector<std::string> names;
  for (int i = 0; i < n_tables; ++i) names.push_back(std::string(1, static_cast<char>('A' + i)));

  // Random spanning tree keeps truth computation exact and cheap.
  std::vector<std::pair<int, int>> tree_edges;
  for (int i = 1; i < n_tables; ++i)
    tree_edges.emplace_back(static_cast<int>(rng.uniform_int(static_cast<uint64_t>(i))), i);

  std::vector<uint32_t> row_counts;
  for (int i = 0; i < n_tables; ++i)
    row_counts.push_back(key_domain * static_cast<uint32_t>(8 + rng.uniform_int(56)));  // 512..4096

  std::vector<std::vector<std::string>> key_columns(static_cast<size_t>(n_tables));
  for (const auto& [a, b] : tree_edges) {
    const std::string col = "k_" + names[static_cast<size_t>(a)] + names[static_cast<size_t>(b)];
    key_columns[static_cast<size_t>(a)].push_back(col);
    key_columns[static_cast<size_t>(b)].push_back(col);
  }

  for (int i = 0; i < n_tables; ++i) {
    Table t;
    t.name = names[static_cast<size_t>(i)];
    t.row_count = row_counts[static_cast<size_t>(i)];
    for (const auto& col : key_columns[static_cast<size_t>(i)]) {
      // each side of an edge draws its own skew so selectivities vary per seed
      const double key_skew = skew * rng.uniform(0.5, 1.5);
      t.columns.push_back(make_column(col, ParamType::Int, key_domain,
                                      zipf_frequencies(key_domain, key_skew), t.row_count,
                                      rng.next_u64()));
    }
    // one predicate column per table; correlated with a join key when skewed
    const std::string pred_name = "p_" + t.name;
    if (skew > 0.0 && !t.columns.empty()) {
      std::vector<uint32_t> identity(key_domain);
      for (uint32_t v = 0; v < key_domain; ++v) identity[v] = v;
      t.columns.push_back(
          make_derived_column(pred_name, ParamType::Int, t.columns.front(), identity));
    } else {
      t.columns.push_back(make_column(pred_name, ParamType::Int, pred_domain,
                                      zipf_frequencies(pred_domain, 0.0), t.row_count,
                                      rng.next_u64()));
    }
    s.indexes.emplace_back(t.name, pred_name);
    s.tables.push_back(std::move(t));
  }

  for (const auto& [a, b] : tree_edges) {
    const std::string col = "k_" + names[static_cast<size_t>(a)] + names[static_cast<size_t>(b)];
    s.edges.push_back({names[static_cast<size_t>(a)], col, names[static_cast<size_t>(b)], col, 0.0});
  }
  s.finalize();
  return s;
}

namespace {

Json column_to_json(const Column& c) {
  Json j;
  j["name"] = c.name;
  j["type"] = to_string(c.type);
  j["domain_size"] = c.domain_size;
  j["freq"] = c.freq;
  j["values"] = c.values;
  if (!c.dict.empty()) j["dict"] = c.dict;
  if (c.type == ParamType::Date) j["date_base"] = c.date_base;
  return j;
}

Column column_from_json(const Json& j) {
  Column c;
  c.name = j.at("name").get<std::string>();
  c.type = param_type_from_string(j.at("type").get<std::string>());
  c.domain_size = j.at("domain_size").get<uint32_t>();
  c.freq = j.at("freq").get<std::vector<double>>();
  c.values = j.at("values").get<std::vector<uint32_t>>();
  if (j.contains("dict")) c.dict = j.at("dict").get<std::vector<std::string>>();
  if (j.contains("date_base")) c.date_base = j.at("date_base").get<int64_t>();
  c.rebuild_counts();
  return c;
}

}  // namespace

void save_schema(const Schema& s, const std::string& path) {
  Json header;
  header["format_version"] = 1;
  header["kind"] = "schema";
  header["seed"] = s.seed;
  header["skew"] = s.skew;
  Json idx = Json::array();
  for (const auto& [t, c] : s.indexes) idx.push_back({{"table", t}, {"column", c}});
  header["indexes"] = std::move(idx);

  std::string out = header.dump();
  out += '\n';
  for (const auto& t : s.tables) {
    Json j;
    j["entry"] = "table";
    j["name"] = t.name;
    j["row_count"] = t.row_count;
    Json cols = Json::array();
    for (const auto& c : t.columns) cols.push_back(column_to_json(c));
    j["columns"] = std::move(cols);
    out += j.dump();
    out += '\n';
  }
  for (const auto& e : s.edges) {
    Json j;
    j["entry"] = "edge";
    j["table1"] = e.table1;
    j["column1"] = e.column1;
    j["table2"] = e.table2;
    j["column2"] = e.column2;
    j["true_selectivity"] = e.true_selectivity;
    out += j.dump();
    out += '\n';
  }
  write_file(path, out);
}

Schema load_schema(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  size_t line_no = 0;
  Schema s;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
      if (line_no == 1) {
        require(j.at("kind") == "schema", "not a schema file");
        require(j.at("format_version").get<int>() == 1, "unsupported schema format_version");
        s.seed = j.at("seed").get<uint64_t>();
        s.skew = j.at("skew").get<double>();
        for (const auto& e : j.at("indexes"))
          s.indexes.emplace_back(e.at("table").get<std::string>(),
                                 e.at("column").get<std::string>());
      } else if (j.at("entry") == "table") {
        Table t;
        t.name = j.at("name").get<std::string>();
        t.row_count = j.at("row_count").get<uint32_t>();
        for (const auto& c : j.at("columns")) t.columns.push_back(column_from_json(c));
        s.tables.push_back(std::move(t));
      } else {
        s.edges.push_back({j.at("table1").get<std::string>(), j.at("column1").get<std::string>(),
                           j.at("table2").get<std::string>(), j.at("column2").get<std::string>(),
                           j.at("true_selectivity").get<double>()});
      }
    } catch (const std::exception& e) {
      fail("schema line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  s.validate();
  return s;
}

}  // namespace pqo::simdb
