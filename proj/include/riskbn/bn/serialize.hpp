#pragma once

#include <filesystem>
#include <string>

#include <json.hpp>

#include "riskbn/bn/network.hpp"

namespace riskbn {

using Json = nlohmann::json;

inline constexpr int kNetworkFormatVersion = 1;

// {"version":1, "variables":[{name, states}], "edges":[[parent, child]],
//  "cpts":[{child, parents, rows:[{given:{parent:state}, p:[...]}]}]}
Json network_to_json(const DiscreteBayesNet& net);

// Throws ParseError for malformed documents, including CPTs with missing or
// duplicated parent configurations.
DiscreteBayesNet network_from_json(const Json& doc);

// Dumps with two-space indentation and a trailing newline.
std::string dump_json(const Json& doc);
Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace riskbn
