#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pqo/core/types.hpp"

namespace pqo::simdb {

// A column holds a frequency model over a small integer domain plus the
// materialized per-row values. Strings map through a dictionary; dates map
// through a base day. Truth is always a count over the materialized values,
// so brute-force row enumeration stays available as an oracle.
struct Column {
  std::string name;
  ParamType type = ParamType::Int;
  uint32_t domain_size = 0;
  std::vector<double> freq;        // model; sums to 1
  std::vector<uint32_t> values;    // one per row
  std::vector<uint32_t> counts;    // histogram of values (the planner's statistics)
  std::vector<std::string> dict;   // type == String: domain value -> literal
  int64_t date_base = 0;           // type == Date: domain value 0 == this day

  uint32_t ndv() const;
  void rebuild_counts();
};

struct Table {
  std::string name;
  uint32_t row_count = 0;
  std::vector<Column> columns;

  const Column& column(const std::string& name) const;
  bool has_column(const std::string& name) const;
};

struct JoinEdge {
  std::string table1;
  std::string column1;
  std::string table2;
  std::string column2;
  double true_selectivity = 0.0;  // derived from materialized keys
};

struct Schema {
  std::vector<Table> tables;
  std::vector<JoinEdge> edges;
  std::vector<std::pair<std::string, std::string>> indexes;  // (table, column)
  double skew = 0.0;
  uint64_t seed = 0;

  const Table& table(const std::string& name) const;
  bool has_index(const std::string& table, const std::string& column) const;
  void validate() const;

  // Fills counts and edge true selectivities from the materialized values.
  void finalize();
};

// Zipf-like frequencies f(v) ~ (v+1)^-skew; skew = 0 is uniform.
std::vector<double> zipf_frequencies(uint32_t domain_size, double skew);

// Integer value counts matching the frequencies, summing exactly to n.
std::vector<uint32_t> largest_remainder_counts(uint32_t n, const std::vector<double>& freq);

// Value multiset from counts, laid out by a seeded shuffle.
std::vector<uint32_t> materialize_counts(const std::vector<uint32_t>& counts, uint64_t seed);

// Column builders used by scenarios and generate_schema.
Column make_column(const std::string& name, ParamType type, uint32_t domain_size,
                   const std::vector<double>& freq, uint32_t row_count, uint64_t seed);
Column make_derived_column(const std::string& name, ParamType type, const Column& source,
                           const std::vector<uint32_t>& value_map);
Column make_column_from_counts(const std::string& name, ParamType type,
                               const std::vector<uint32_t>& counts, uint64_t seed);
// value(r) = (r / stride) % domain; exact joint independence between columns
// whose strides tile the row count.
Column make_cyclic_column(const std::string& name, ParamType type, uint32_t domain_size,
                          uint32_t row_count, uint32_t stride);

// Random but deterministic schema: tree-shaped join graph, Zipf column
// frequencies, one predicate column per table. skew > 0 additionally
// correlates predicate columns with join keys, the estimator's blind spot.
Schema generate_schema(uint64_t seed, int n_tables, double skew);

// Serialized as line-delimited JSON like the other artifacts.
void save_schema(const Schema& s, const std::string& path);
Schema load_schema(const std::string& path);

}  // namespace pqo::simdb
