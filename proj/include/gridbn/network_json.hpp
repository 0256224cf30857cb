#pragma once

#include <filesystem>
#include <string>

#include "json.hpp"
#include "gridbn/model.hpp"

namespace gridbn {

/// JSON document with "metadata" and "nodes". Node distributions carry
/// exactly one of "cpt" or "noisy_or"; states and triggering conditions are
/// written as labels.
nlohmann::json network_to_json(const Network& network);

/// Throws Error(kSchema) with a field path on malformed documents. The
/// returned network is not validated.
Network network_from_json(const nlohmann::json& doc);

Network load_network(const std::filesystem::path& path);
void save_network(const Network& network, const std::filesystem::path& path);

/// Reads a whole file as JSON; parse errors carry line/column diagnostics.
nlohmann::json read_json_file(const std::filesystem::path& path);

/// Shortest round-trip decimal rendering ("2.8", "13", "0.125").
std::string format_number(double value);

}  // namespace gridbn
