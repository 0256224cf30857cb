#include "gridbn/network_json.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace gridbn {

using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& where, const std::string& what) {
  throw Error(ErrorCode::kSchema, where + ": " + what);
}

const json& require(const json& obj, const char* key, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(where, std::string("missing field \"") + key + "\"");
  return *it;
}

double as_number(const json& value, const std::string& where) {
  if (!value.is_number()) schema_error(where, "expected a number");
  return value.get<double>();
}

std::string as_string(const json& value, const std::string& where) {
  if (!value.is_string()) schema_error(where, "expected a string");
  return value.get<std::string>();
}

std::vector<std::string> as_string_list(const json& value, const std::string& where) {
  if (!value.is_array()) schema_error(where, "expected an array of strings");
  std::vector<std::string> out;
  for (std::size_t i = 0; i < value.size(); ++i) {
    out.push_back(as_string(value[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

json divorce_plan_to_json(const DivorcePlan& plan) {
  json introduced = json::array();
  for (const auto& aux : plan.introduced_nodes) {
    introduced.push_back(
        {{"id", aux.id}, {"child", aux.child}, {"grouped_parents", aux.grouped_parents}});
  }
  return {{"max_parents_per_child", plan.max_parents_per_child},
          {"introduced_nodes", introduced}};
}

DivorcePlan divorce_plan_from_json(const json& doc, const std::string& where) {
  DivorcePlan plan;
  const auto& max = require(doc, "max_parents_per_child", where);
  if (!max.is_number_unsigned()) schema_error(where, "max_parents_per_child must be a count");
  plan.max_parents_per_child = max.get<std::size_t>();
  const auto& list = require(doc, "introduced_nodes", where);
  if (!list.is_array()) schema_error(where, "introduced_nodes must be an array");
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string at = where + ".introduced_nodes[" + std::to_string(i) + "]";
    IntroducedNode aux;
    aux.id = as_string(require(list[i], "id", at), at + ".id");
    aux.child = as_string(require(list[i], "child", at), at + ".child");
    aux.grouped_parents =
        as_string_list(require(list[i], "grouped_parents", at), at + ".grouped_parents");
    plan.introduced_nodes.push_back(std::move(aux));
  }
  return plan;
}

}  // namespace

std::string format_number(double value) {
  char buf[64];
  auto result = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, result.ptr);
}

json network_to_json(const Network& network) {
  json metadata = json::object();
  for (const auto& [key, value] : network.metadata()) metadata[key] = value;
  if (network.divorce_plan()) {
    metadata["divorce_plan"] = divorce_plan_to_json(*network.divorce_plan());
  }

  json nodes = json::array();
  for (const Node& node : network.nodes()) {
    json out = {{"id", node.id},
                {"layer", to_string(node.layer)},
                {"states", node.states},
                {"parents", node.parents}};
    if (node.auxiliary) out["auxiliary"] = true;
    if (const auto* cpt = node.explicit_cpt()) {
      out["cpt"] = cpt->rows;
    } else {
      const auto& params = node.noisy_or();
      json triggering = json::array();
      for (std::size_t i = 0; i < params.triggering.size(); ++i) {
        auto idx = network.index_of(node.parents.at(i));
        const auto& parent = network.nodes().at(idx.value());
        triggering.push_back(parent.states.at(params.triggering[i]));
      }
      out["noisy_or"] = {{"thetas", params.thetas},
                         {"leak", params.leak},
                         {"true_state", node.states.at(params.true_state)},
                         {"triggering", triggering}};
    }
    if (node.value_map) {
      out["value_map"] = {{"threshold", node.value_map->threshold},
                          {"low_submean", node.value_map->low_submean},
                          {"high_submean", node.value_map->high_submean}};
    }
    nodes.push_back(std::move(out));
  }
  return {{"metadata", metadata}, {"nodes", nodes}};
}

Network network_from_json(const json& doc) {
  if (!doc.is_object()) schema_error("$", "network document must be an object");

  std::map<std::string, std::string> metadata;
  std::optional<DivorcePlan> plan;
  if (auto it = doc.find("metadata"); it != doc.end()) {
    if (!it->is_object()) schema_error("metadata", "expected an object");
    for (const auto& [key, value] : it->items()) {
      if (key == "divorce_plan") {
        plan = divorce_plan_from_json(value, "metadata.divorce_plan");
      } else {
        metadata[key] = as_string(value, "metadata." + key);
      }
    }
  }

  const json& list = require(doc, "nodes", "$");
  if (!list.is_array()) schema_error("nodes", "expected an array");

  // Labels are resolved to indices after every node's states are known.
  struct PendingNoisyOr {
    std::size_t node;
    std::string true_state;
    std::vector<std::string> triggering;
    std::string where;
  };
  std::vector<Node> nodes;
  std::vector<PendingNoisyOr> pending;

  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string where = "nodes[" + std::to_string(i) + "]";
    const json& item = list[i];
    if (!item.is_object()) schema_error(where, "expected an object");
    Node node;
    node.id = as_string(require(item, "id", where), where + ".id");
    const std::string at = "nodes[" + node.id + "]";
    node.layer = parse_layer(as_string(require(item, "layer", at), at + ".layer"));
    node.states = as_string_list(require(item, "states", at), at + ".states");
    node.parents = as_string_list(require(item, "parents", at), at + ".parents");
    if (auto aux = item.find("auxiliary"); aux != item.end()) {
      if (!aux->is_boolean()) schema_error(at + ".auxiliary", "expected a boolean");
      node.auxiliary = aux->get<bool>();
    }

    const bool has_cpt = item.contains("cpt");
    const bool has_noisy = item.contains("noisy_or");
    if (has_cpt == has_noisy) {
      schema_error(at, "exactly one of \"cpt\" or \"noisy_or\" is required");
    }
    if (has_cpt) {
      const json& rows = item["cpt"];
      if (!rows.is_array()) schema_error(at + ".cpt", "expected an array of rows");
      ExplicitCpt cpt;
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::string row_at = at + ".cpt[" + std::to_string(r) + "]";
        if (!rows[r].is_array()) schema_error(row_at, "expected an array");
        std::vector<double> row;
        for (std::size_t k = 0; k < rows[r].size(); ++k) {
          row.push_back(as_number(rows[r][k], row_at + "[" + std::to_string(k) + "]"));
        }
        cpt.rows.push_back(std::move(row));
      }
      node.distribution = std::move(cpt);
    } else {
      const json& params = item["noisy_or"];
      const std::string p_at = at + ".noisy_or";
      if (!params.is_object()) schema_error(p_at, "expected an object");
      NoisyOrParams noisy;
      const json& thetas = require(params, "thetas", p_at);
      if (!thetas.is_array()) schema_error(p_at + ".thetas", "expected an array");
      for (std::size_t k = 0; k < thetas.size(); ++k) {
        noisy.thetas.push_back(
            as_number(thetas[k], p_at + ".thetas[" + std::to_string(k) + "]"));
      }
      noisy.leak = as_number(require(params, "leak", p_at), p_at + ".leak");
      pending.push_back(
          {nodes.size(),
           as_string(require(params, "true_state", p_at), p_at + ".true_state"),
           as_string_list(require(params, "triggering", p_at), p_at + ".triggering"),
           p_at});
      node.distribution = std::move(noisy);
    }

    if (auto vm = item.find("value_map"); vm != item.end()) {
      const std::string v_at = at + ".value_map";
      if (!vm->is_object()) schema_error(v_at, "expected an object");
      ValueMap map;
      map.threshold = as_number(require(*vm, "threshold", v_at), v_at + ".threshold");
      map.low_submean = as_number(require(*vm, "low_submean", v_at), v_at + ".low_submean");
      map.high_submean =
          as_number(require(*vm, "high_submean", v_at), v_at + ".high_submean");
      node.value_map = map;
    }
    nodes.push_back(std::move(node));
  }

  std::map<std::string, const Node*> by_id;
  for (const auto& node : nodes) by_id.emplace(node.id, &node);

  for (const auto& p : pending) {
    Node& node = nodes[p.node];
    auto& params = std::get<NoisyOrParams>(node.distribution);
    auto true_idx = node.state_index(p.true_state);
    if (!true_idx) schema_error(p.where + ".true_state", "unknown state " + p.true_state);
    params.true_state = *true_idx;
    if (p.triggering.size() != node.parents.size()) {
      schema_error(p.where + ".triggering", "expected one label per parent");
    }
    for (std::size_t k = 0; k < p.triggering.size(); ++k) {
      auto parent = by_id.find(node.parents[k]);
      if (parent == by_id.end()) {
        schema_error(p.where, "missing parent " + node.parents[k]);
      }
      auto idx = parent->second->state_index(p.triggering[k]);
      if (!idx) {
        schema_error(p.where + ".triggering[" + std::to_string(k) + "]",
                     "parent " + node.parents[k] + " has no state " + p.triggering[k]);
      }
      params.triggering.push_back(*idx);
    }
  }

  return Network(std::move(nodes), std::move(metadata), std::move(plan));
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // Translate the byte offset into line/column.
    std::size_t line = 1, column = 1;
    for (std::size_t i = 0; i + 1 < e.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw Error(ErrorCode::kSchema, path.string() + ":" + std::to_string(line) + ":" +
                                        std::to_string(column) + ": invalid JSON");
  }
}

Network load_network(const std::filesystem::path& path) {
  try {
    return network_from_json(read_json_file(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kSchema || e.code() == ErrorCode::kIo) {
      if (std::string_view(e.what()).starts_with(path.string())) throw;
      throw Error(e.code(), path.string() + ": " + e.what());
    }
    throw;
  }
}

void save_network(const Network& network, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out << network_to_json(network).dump(2) << '\n';
}

}  // namespace gridbn
