#include <cmath>
#include <numeric>

#include "gridbn/elicitation.hpp"
#include "gridbn/network_json.hpp"

namespace gridbn {

using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::kSchema, where + ": " + what);
}

const json& require(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) schema_error(where, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(where, std::string("missing field \"") + key + "\"");
  return *it;
}

double number(const json& value, const std::string& where) {
  if (!value.is_number()) schema_error(where, "expected a number");
  return value.get<double>();
}

std::string text(const json& value, const std::string& where) {
  if (!value.is_string()) schema_error(where, "expected a string");
  return value.get<std::string>();
}

double percent(const json& value, const std::string& where) {
  const double p = number(value, where);
  if (!(p >= 0.0 && p <= 100.0)) schema_error(where, "percentage outside [0, 100]");
  return p;
}

// Either a bare number or {"<value_key>": x, "confidence": c}.
Answer answer(const json& value, const char* value_key, double default_confidence,
              bool is_percent, const std::string& where) {
  Answer out{0.0, default_confidence};
  if (value.is_number()) {
    out.value = value.get<double>();
  } else if (value.is_object()) {
    out.value = number(require(value, value_key, where), where + "." + value_key);
    if (auto c = value.find("confidence"); c != value.end()) {
      out.confidence = percent(*c, where + ".confidence");
    }
  } else {
    schema_error(where, "expected a number or an object");
  }
  if (is_percent && !(out.value >= 0.0 && out.value <= 100.0)) {
    schema_error(where, "percentage outside [0, 100]");
  }
  if (!is_percent && out.value < 0.0) schema_error(where, "capacity must be >= 0 GW");
  return out;
}

std::map<std::string, Answer> effect_map(const json& value, double default_confidence,
                                         const std::string& where) {
  if (!value.is_object()) schema_error(where, "expected an object");
  std::map<std::string, Answer> out;
  for (const auto& [key, item] : value.items()) {
    out[key] = answer(item, "effect", default_confidence, true, where + "." + key);
  }
  return out;
}

TableAnswer table_answer(const json& value, double default_confidence,
                         const std::string& where) {
  TableAnswer out;
  out.confidence = default_confidence;
  const json& rows = require(value, "rows", where);
  if (!rows.is_array()) schema_error(where + ".rows", "expected an array");
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const std::string at = where + ".rows[" + std::to_string(r) + "]";
    if (rows[r].is_null()) {
      out.rows.emplace_back(std::nullopt);
      continue;
    }
    if (!rows[r].is_array()) schema_error(at, "expected an array of percentages");
    std::vector<double> row;
    for (std::size_t k = 0; k < rows[r].size(); ++k) {
      row.push_back(percent(rows[r][k], at + "[" + std::to_string(k) + "]"));
    }
    const double sum = std::accumulate(row.begin(), row.end(), 0.0);
    if (std::abs(sum - 100.0) > 0.5) {
      schema_error(at, "row sums to " + format_number(sum) + ", expected 100");
    }
    out.rows.emplace_back(std::move(row));
  }
  if (auto c = value.find("confidence"); c != value.end()) {
    out.confidence = percent(*c, where + ".confidence");
  }
  return out;
}

IciQuestion ici_question(const std::string& name, const std::string& where) {
  if (name == "qs1c") return IciQuestion::kQs1c;
  if (name == "qs3a") return IciQuestion::kQs3a;
  if (name == "qs3b") return IciQuestion::kQs3b;
  schema_error(where, "unknown question " + name);
}

std::vector<std::string> string_list(const json& value, const std::string& where) {
  if (!value.is_array()) schema_error(where, "expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < value.size(); ++i) {
    out.push_back(text(value[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

TotalSpec total_spec(const json& value, const std::string& where) {
  TotalSpec out;
  out.id = text(require(value, "id", where), where + ".id");
  out.label = value.contains("label") ? text(value["label"], where + ".label") : out.id;
  out.threshold = number(require(value, "threshold", where), where + ".threshold");
  out.members = string_list(require(value, "members", where), where + ".members");
  out.question =
      ici_question(text(require(value, "question", where), where + ".question"), where);
  return out;
}

}  // namespace

std::vector<ExpertResponse> survey_from_json(const json& doc) {
  const json& experts = require(doc, "experts", "$");
  if (!experts.is_array()) schema_error("experts", "expected an array");

  std::vector<ExpertResponse> out;
  for (std::size_t i = 0; i < experts.size(); ++i) {
    const json& e = experts[i];
    std::string where = "experts[" + std::to_string(i) + "]";
    ExpertResponse r;
    r.expert_id = text(require(e, "id", where), where + ".id");
    where = "experts[" + r.expert_id + "]";
    r.confidence_default =
        percent(require(e, "confidence_default", where), where + ".confidence_default");

    if (auto it = e.find("qs1a"); it != e.end()) {
      if (!it->is_object()) schema_error(where + ".qs1a", "expected an object");
      for (const auto& [component, item] : it->items()) {
        r.qs1a[component] =
            answer(item, "gw", r.confidence_default, false, where + ".qs1a." + component);
      }
    }
    if (auto it = e.find("qs1b"); it != e.end()) {
      if (!it->is_object()) schema_error(where + ".qs1b", "expected an object");
      for (const auto& [component, item] : it->items()) {
        r.qs1b[component] = string_list(item, where + ".qs1b." + component);
      }
    }
    if (auto it = e.find("qs1c"); it != e.end()) {
      if (!it->is_object()) schema_error(where + ".qs1c", "expected an object");
      for (const auto& [component, item] : it->items()) {
        r.qs1c[component] = effect_map(item, r.confidence_default, where + ".qs1c." + component);
      }
    }
    if (auto it = e.find("qs2"); it != e.end()) {
      r.qs2 = table_answer(*it, r.confidence_default, where + ".qs2");
    }
    if (auto it = e.find("qs3a"); it != e.end()) {
      r.qs3a = effect_map(*it, r.confidence_default, where + ".qs3a");
    }
    if (auto it = e.find("qs3b"); it != e.end()) {
      r.qs3b = effect_map(*it, r.confidence_default, where + ".qs3b");
    }
    if (auto it = e.find("qs4"); it != e.end()) {
      r.qs4 = table_answer(*it, r.confidence_default, where + ".qs4");
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<ExpertResponse> load_survey(const std::filesystem::path& path) {
  try {
    return survey_from_json(read_json_file(path));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kSchema || std::string_view(e.what()).starts_with(path.string())) {
      throw;
    }
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

Layout layout_from_json(const json& doc) {
  Layout out;
  out.name = doc.contains("name") ? text(doc["name"], "name") : "network";
  out.version = doc.contains("version") ? text(doc["version"], "version") : "";

  const json& factors = require(doc, "factors", "$");
  if (!factors.is_array()) schema_error("factors", "expected an array");
  for (std::size_t i = 0; i < factors.size(); ++i) {
    const std::string where = "factors[" + std::to_string(i) + "]";
    FactorSpec f;
    f.id = text(require(factors[i], "id", where), where + ".id");
    f.label = factors[i].contains("label") ? text(factors[i]["label"], where + ".label") : f.id;
    if (factors[i].contains("states")) {
      f.states = string_list(factors[i]["states"], where + ".states");
      if (f.states.size() != 2) schema_error(where + ".states", "factors are binary");
    }
    f.present_state = factors[i].contains("present")
                          ? text(factors[i]["present"], where + ".present")
                          : f.states.back();
    if (std::find(f.states.begin(), f.states.end(), f.present_state) == f.states.end()) {
      schema_error(where + ".present", "not one of the factor's states");
    }
    out.factors.push_back(std::move(f));
  }

  const json& components = require(doc, "components", "$");
  if (!components.is_array()) schema_error("components", "expected an array");
  for (std::size_t i = 0; i < components.size(); ++i) {
    const std::string where = "components[" + std::to_string(i) + "]";
    ComponentSpec c;
    if (components[i].is_string()) {
      c.id = c.label = components[i].get<std::string>();
    } else {
      c.id = text(require(components[i], "id", where), where + ".id");
      c.label = components[i].contains("label")
                    ? text(components[i]["label"], where + ".label")
                    : c.id;
    }
    out.components.push_back(std::move(c));
  }

  if (doc.contains("survey_only")) out.survey_only = string_list(doc["survey_only"], "survey_only");
  if (doc.contains("import_component")) {
    out.import_component = text(doc["import_component"], "import_component");
  }
  if (doc.contains("parents_per_component")) {
    const json& k = doc["parents_per_component"];
    if (!k.is_number_unsigned() || k.get<std::size_t>() == 0) {
      schema_error("parents_per_component", "expected a positive integer");
    }
    out.parents_per_component = k.get<std::size_t>();
  }
  out.bulk = total_spec(require(doc, "bulk", "$"), "bulk");
  out.balance = total_spec(require(doc, "balance", "$"), "balance");
  if (doc.contains("grid")) {
    const json& g = doc["grid"];
    out.grid.id = text(require(g, "id", "grid"), "grid.id");
    if (g.contains("states")) out.grid.states = string_list(g["states"], "grid.states");
  }
  if (doc.contains("storage")) {
    const json& s = doc["storage"];
    StorageSpec storage;
    storage.id = text(require(s, "id", "storage"), "storage.id");
    storage.parents = string_list(require(s, "parents", "storage"), "storage.parents");
    storage.states = string_list(require(s, "states", "storage"), "storage.states");
    if (storage.parents.size() != 2) schema_error("storage.parents", "expected two parents");
    if (storage.states.size() != 4) schema_error("storage.states", "expected four states");
    out.storage = std::move(storage);
  }
  if (doc.contains("max_parents")) {
    const json& m = doc["max_parents"];
    if (!m.is_number_unsigned()) schema_error("max_parents", "expected a positive integer");
    out.max_parents = m.get<std::size_t>();
  }
  if (doc.contains("weighting")) {
    out.policy.weighting = parse_weighting(text(doc["weighting"], "weighting"));
  }
  return out;
}

Layout load_layout(const std::filesystem::path& path) {
  try {
    return layout_from_json(read_json_file(path));
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kSchema || std::string_view(e.what()).starts_with(path.string())) {
      throw;
    }
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

}  // namespace gridbn
