#include "riskbn/bn/serialize.hpp"

#include <fstream>
#include <sstream>

#include "riskbn/error.hpp"

namespace riskbn {

Json network_to_json(const DiscreteBayesNet& net) {
  Json doc;
  doc["version"] = kNetworkFormatVersion;
  doc["variables"] = Json::array();
  for (const auto& v : net.variables()) {
    doc["variables"].push_back({{"name", v.name}, {"states", v.states}});
  }
  doc["edges"] = Json::array();
  for (const auto& [p, c] : net.edges()) doc["edges"].push_back(Json::array({p, c}));
  doc["cpts"] = Json::array();
  for (const auto& v : net.variables()) {
    const Cpt* cpt = net.cpt(v.name);
    if (!cpt) continue;
    Json rows = Json::array();
    std::vector<Index> cards;
    for (const auto& p : cpt->parents) cards.push_back(net.variable(p).cardinality());
    std::vector<Index> assign(cards.size(), 0);
    for (Index r = 0; r < cpt->table.rows(); ++r) {
      Json given = Json::object();
      for (std::size_t i = 0; i < assign.size(); ++i) {
        given[cpt->parents[i]] = net.variable(cpt->parents[i]).states[static_cast<std::size_t>(assign[i])];
      }
      std::vector<double> p(cpt->table.row(r).begin(), cpt->table.row(r).end());
      rows.push_back({{"given", given}, {"p", p}});
      for (std::size_t i = assign.size(); i-- > 0;) {
        if (++assign[i] < cards[i]) break;
        assign[i] = 0;
      }
    }
    doc["cpts"].push_back({{"child", cpt->child}, {"parents", cpt->parents}, {"rows", rows}});
  }
  return doc;
}

DiscreteBayesNet network_from_json(const Json& doc) {
  try {
    if (!doc.is_object() || !doc.contains("version")) throw ParseError("network: missing version");
    if (doc.at("version").get<int>() != kNetworkFormatVersion) {
      throw ParseError("network: unsupported version " + doc.at("version").dump());
    }
    DiscreteBayesNet net;
    for (const auto& v : doc.at("variables")) {
      net.add_variable({v.at("name").get<std::string>(), v.at("states").get<std::vector<std::string>>()});
    }
    for (const auto& e : doc.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw ParseError("network: edge must be [parent, child]");
      net.add_edge(e[0].get<std::string>(), e[1].get<std::string>());
    }
    for (const auto& c : doc.at("cpts")) {
      Cpt cpt;
      cpt.child = c.at("child").get<std::string>();
      cpt.parents = c.at("parents").get<std::vector<std::string>>();
      const auto& child = net.variable(cpt.child);
      const Index n_rows = configuration_count(net, cpt.parents);
      cpt.table = Matrix::Constant(n_rows, child.cardinality(), 0.0);
      std::vector<bool> seen(static_cast<std::size_t>(n_rows), false);
      for (const auto& row : c.at("rows")) {
        std::vector<Index> states;
        const auto& given = row.at("given");
        if (given.size() != cpt.parents.size()) {
          throw ParseError("cpt '" + cpt.child + "': row does not assign every parent");
        }
        for (const auto& p : cpt.parents) {
          const auto label = given.at(p).get<std::string>();
          const Index s = net.variable(p).state_index(label);
          if (s < 0) throw ParseError("cpt '" + cpt.child + "': unknown state '" + label + "' of '" + p + "'");
          states.push_back(s);
        }
        const Index r = cpt_row_index(net, cpt, states);
        if (seen[static_cast<std::size_t>(r)]) {
          throw ParseError("cpt '" + cpt.child + "': duplicate parent configuration");
        }
        seen[static_cast<std::size_t>(r)] = true;
        const auto p = row.at("p").get<std::vector<double>>();
        if (static_cast<Index>(p.size()) != child.cardinality()) {
          throw ParseError("cpt '" + cpt.child + "': probability vector length mismatch");
        }
        for (std::size_t k = 0; k < p.size(); ++k) cpt.table(r, static_cast<Index>(k)) = p[k];
      }
      for (bool s : seen) {
        if (!s) throw ParseError("cpt '" + cpt.child + "': missing parent configuration");
      }
      net.set_cpt(std::move(cpt));
    }
    return net;
  } catch (const Json::exception& e) {
    throw ParseError(std::string("network: ") + e.what());
  }
}

std::string dump_json(const Json& doc) { return doc.dump(2) + "\n"; }

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io_error", "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json read_json_file(const std::filesystem::path& path) {
  try {
    return Json::parse(read_text_file(path));
  } catch (const Json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io_error", "cannot write " + path.string());
  out << content;
}

}  // namespace riskbn
