#include "pqo/core/json_io.hpp"

#include <fstream>
#include <sstream>

#include "pqo/core/error.hpp"
#include "pqo/core/rng.hpp"

namespace pqo {

Json to_json(const ParamValue& v) {
  switch (v.type) {
    case ParamType::Int: return v.i;
    case ParamType::Float: return v.f;
    case ParamType::String: return v.s;
    case ParamType::Date: return format_date(v.i);
  }
  fail("unknown param type");
}

ParamValue param_value_from_json(const Json& j, ParamType type) {
  switch (type) {
    case ParamType::Int: return ParamValue::make_int(j.get<int64_t>());
    case ParamType::Float: return ParamValue::make_float(j.get<double>());
    case ParamType::String: return ParamValue::make_string(j.get<std::string>());
    case ParamType::Date: return ParamValue::make_date(parse_date(j.get<std::string>()));
  }
  fail("unknown param type");
}

Json to_json(const QueryTemplate& t) {
  Json j;
  j["template_id"] = t.template_id;
  j["tables"] = t.tables;
  Json edges = Json::array();
  for (const auto& e : t.join_graph)
    edges.push_back({{"table1", e.table1},
                     {"column1", e.column1},
                     {"table2", e.table2},
                     {"column2", e.column2}});
  j["join_graph"] = std::move(edges);
  Json preds = Json::array();
  for (const auto& p : t.predicates)
    preds.push_back({{"table", p.table},
                     {"column", p.column},
                     {"op", to_string(p.op)},
                     {"param_slot", p.param_slot}});
  j["predicates"] = std::move(preds);
  Json specs = Json::array();
  for (const auto& s : t.param_specs)
    specs.push_back({{"type", to_string(s.type)}, {"table", s.table}, {"column", s.column}});
  j["param_specs"] = std::move(specs);
  return j;
}

QueryTemplate template_from_json(const Json& j) {
  QueryTemplate t;
  t.template_id = j.at("template_id").get<std::string>();
  t.tables = j.at("tables").get<std::vector<std::string>>();
  for (const auto& e : j.at("join_graph"))
    t.join_graph.push_back({e.at("table1").get<std::string>(), e.at("column1").get<std::string>(),
                            e.at("table2").get<std::string>(), e.at("column2").get<std::string>()});
  for (const auto& p : j.at("predicates"))
    t.predicates.push_back({p.at("table").get<std::string>(), p.at("column").get<std::string>(),
                            predicate_op_from_string(p.at("op").get<std::string>()),
                            p.at("param_slot").get<int>()});
  for (const auto& s : j.at("param_specs"))
    t.param_specs.push_back({param_type_from_string(s.at("type").get<std::string>()),
                             s.at("table").get<std::string>(), s.at("column").get<std::string>()});
  t.validate();
  return t;
}

Json to_json(const QueryInstance& q, const QueryTemplate& tmpl) {
  q.validate_against(tmpl);
  Json bindings = Json::array();
  for (const auto& b : q.bindings) bindings.push_back(to_json(b));
  return Json{{"bindings", std::move(bindings)}};
}

QueryInstance instance_from_json(const Json& j, const QueryTemplate& tmpl) {
  QueryInstance q;
  q.template_id = tmpl.template_id;
  const auto& bindings = j.at("bindings");
  require(bindings.size() == tmpl.param_specs.size(), "binding count mismatch");
  for (size_t i = 0; i < bindings.size(); ++i)
    q.bindings.push_back(param_value_from_json(bindings[i], tmpl.param_specs[i].type));
  return q;
}

Json to_json(const PlanTree& plan) {
  auto emit = [&](auto&& self, int32_t i) -> Json {
    const PlanNode& n = plan.node(i);
    if (n.is_leaf) {
      return Json{{"scan", to_string(n.scan)},
                  {"table", n.table},
                  {"card", n.estimated_cardinality}};
    }
    return Json{{"join", to_string(n.join)},
                {"card", n.estimated_cardinality},
                {"left", self(self, n.left)},
                {"right", self(self, n.right)}};
  };
  return emit(emit, plan.root);
}

PlanTree plan_from_json(const Json& j) {
  auto build = [&](auto&& self, const Json& node) -> PlanTree {
    if (node.contains("scan")) {
      return PlanTree::leaf(node.at("table").get<std::string>(),
                            scan_op_from_string(node.at("scan").get<std::string>()),
                            node.at("card").get<double>());
    }
    PlanTree l = self(self, node.at("left"));
    PlanTree r = self(self, node.at("right"));
    return PlanTree::join(join_op_from_string(node.at("join").get<std::string>()),
                          std::move(l), std::move(r), node.at("card").get<double>());
  };
  PlanTree p = build(build, j);
  p.validate();
  return p;
}

Json to_json(const ExecutionRecord& r) {
  Json j;
  j["instance"] = r.instance_index;
  j["fingerprint"] = r.fingerprint.to_hex();
  j["latencies_ms"] = r.latencies_ms;
  j["censored"] = r.censored;
  if (r.timeout_ms)
    j["timeout_ms"] = *r.timeout_ms;
  else
    j["timeout_ms"] = nullptr;
  return j;
}

ExecutionRecord record_from_json(const Json& j) {
  ExecutionRecord r;
  r.instance_index = j.at("instance").get<int64_t>();
  r.fingerprint = PlanFingerprint::from_hex(j.at("fingerprint").get<std::string>());
  r.latencies_ms = j.at("latencies_ms").get<std::vector<double>>();
  r.censored = j.at("censored").get<bool>();
  if (!j.at("timeout_ms").is_null()) r.timeout_ms = j.at("timeout_ms").get<double>();
  r.validate();
  return r;
}

void save_workload(const Workload& w, const QueryTemplate& tmpl, const std::string& path) {
  w.validate();
  require(w.template_id == tmpl.template_id, "workload/template id mismatch");
  Json header;
  header["format_version"] = 1;
  header["kind"] = "workload";
  header["template"] = to_json(tmpl);
  std::string out = header.dump();
  out += '\n';
  for (const auto& q : w.instances) {
    out += to_json(q, tmpl).dump();
    out += '\n';
  }
  write_file(path, out);
}

std::pair<Workload, QueryTemplate> load_workload(const std::string& path) {
  std::istringstream in(read_file(path));
  std::string line;
  size_t line_no = 0;
  Workload w;
  QueryTemplate tmpl;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    Json j;
    try {
      j = Json::parse(line);
      if (line_no == 1) {
        require(j.at("kind") == "workload", "not a workload file");
        require(j.at("format_version").get<int>() == 1, "unsupported workload format_version");
        tmpl = template_from_json(j.at("template"));
        w.template_id = tmpl.template_id;
      } else {
        w.instances.push_back(instance_from_json(j, tmpl));
      }
    } catch (const std::exception& e) {
      fail("workload line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  require(line_no >= 1, "empty workload file");
  return {w, tmpl};
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  require(out.good(), "cannot write file: " + path);
  out << content;
  require(out.good(), "write failed: " + path);
}

std::string json_digest(const Json& j) {
  const uint64_t h = fnv1a64(j.dump());
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace pqo
