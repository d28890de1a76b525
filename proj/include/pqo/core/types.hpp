#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "pqo/core/error.hpp"

namespace pqo {

enum class ParamType { Int, Float, String, Date };

std::string to_string(ParamType t);
ParamType param_type_from_string(const std::string& s);

// Days since 1970-01-01 (proleptic Gregorian).
int64_t days_from_civil(int year, unsigned month, unsigned day);
void civil_from_days(int64_t days, int& year, unsigned& month, unsigned& day);
int64_t parse_date(const std::string& iso);       // "YYYY-MM-DD" -> days
std::string format_date(int64_t days);            // days -> "YYYY-MM-DD"

// Tagged parameter value. Dates are kept as epoch days.
struct ParamValue {
  ParamType type = ParamType::Int;
  int64_t i = 0;     // Int, Date
  double f = 0.0;    // Float
  std::string s;     // String

  static ParamValue make_int(int64_t v) { return {ParamType::Int, v, 0.0, {}}; }
  static ParamValue make_float(double v) { return {ParamType::Float, 0, v, {}}; }
  static ParamValue make_string(std::string v) { return {ParamType::String, 0, 0.0, std::move(v)}; }
  static ParamValue make_date(int64_t days) { return {ParamType::Date, days, 0.0, {}}; }

  bool operator==(const ParamValue& o) const {
    return type == o.type && i == o.i && f == o.f && s == o.s;
  }
};

struct ParamSpec {
  ParamType type = ParamType::Int;
  std::string table;
  std::string column;
};

enum class PredicateOp { Eq, Le, Ge };

std::string to_string(PredicateOp op);
PredicateOp predicate_op_from_string(const std::string& s);

struct Predicate {
  std::string table;
  std::string column;
  PredicateOp op = PredicateOp::Eq;
  int param_slot = 0;
};

struct JoinGraphEdge {
  std::string table1;
  std::string column1;
  std::string table2;
  std::string column2;
};

struct QueryTemplate {
  std::string template_id;
  std::vector<std::string> tables;       // ordered
  std::vector<JoinGraphEdge> join_graph;
  std::vector<Predicate> predicates;
  std::vector<ParamSpec> param_specs;    // m >= 1 parameter descriptors

  size_t param_count() const { return param_specs.size(); }
  bool has_table(const std::string& t) const;
  void validate() const;  // connectivity, slot coverage, m >= 1
};

struct QueryInstance {
  std::string template_id;
  std::vector<ParamValue> bindings;

  void validate_against(const QueryTemplate& tmpl) const;
  uint64_t content_hash() const;
};

struct Workload {
  std::string template_id;
  std::vector<QueryInstance> instances;  // order = collection order

  void validate() const;
};

// Deterministic 80/20-style split; sizes within 1 of the fraction.
std::pair<Workload, Workload> split_workload(const Workload& w, double train_fraction,
                                             uint64_t seed);

// Index view of the same split (original workload positions, ascending).
std::pair<std::vector<size_t>, std::vector<size_t>> split_indices(size_t n,
                                                                  double train_fraction,
                                                                  uint64_t seed);

}  // namespace pqo
