#pragma once

#include <string>

#include <json.hpp>

#include "pqo/core/dataset.hpp"
#include "pqo/core/plan.hpp"
#include "pqo/core/types.hpp"

namespace pqo {

using Json = nlohmann::json;

Json to_json(const ParamValue& v);
ParamValue param_value_from_json(const Json& j, ParamType type);

Json to_json(const QueryTemplate& t);
QueryTemplate template_from_json(const Json& j);

Json to_json(const QueryInstance& q, const QueryTemplate& tmpl);
QueryInstance instance_from_json(const Json& j, const QueryTemplate& tmpl);

Json to_json(const PlanTree& plan);
PlanTree plan_from_json(const Json& j);

Json to_json(const ExecutionRecord& r);
ExecutionRecord record_from_json(const Json& j);

// Workload files carry the full template in the header line so they are
// self-describing; instances follow one per line.
void save_workload(const Workload& w, const QueryTemplate& tmpl, const std::string& path);
std::pair<Workload, QueryTemplate> load_workload(const std::string& path);

std::string read_file(const std::string& path);
void write_file(const std::string& path, const std::string& content);

// Stable content digest of a JSON document (sorted keys, compact dump).
std::string json_digest(const Json& j);

}  // namespace pqo
