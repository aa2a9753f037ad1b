#include "ramp_stdae/topology.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace ramp_stdae {

namespace {

std::string join_violations(const std::vector<std::string>& v) {
  std::ostringstream out;
  out << "interchange spec invalid:";
  for (const auto& s : v) out << "\n  - " << s;
  return out.str();
}

template <typename T>
T require(const nlohmann::json& obj, const std::string& key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw ParseError("missing field '" + where + key + "'");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ParseError("field '" + where + key + "' has the wrong type");
  }
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> violations)
    : std::runtime_error(join_violations(violations)), violations_(std::move(violations)) {}

std::int64_t InterchangeSpec::direction_index(const std::string& id) const {
  for (std::size_t i = 0; i < directions.size(); ++i) {
    if (directions[i] == id) return static_cast<std::int64_t>(i);
  }
  throw LookupError("unknown direction '" + id + "'");
}

std::int64_t InterchangeSpec::movement_index(const std::string& id) const {
  for (std::size_t i = 0; i < movements.size(); ++i) {
    if (movements[i].id == id) return static_cast<std::int64_t>(i);
  }
  throw LookupError("unknown movement '" + id + "'");
}

std::vector<std::string> InterchangeSpec::violations() const {
  std::vector<std::string> out;
  if (directions.size() < 2) out.push_back("need at least 2 directions, got " + std::to_string(directions.size()));
  if (movements.empty()) out.push_back("need at least 1 movement");
  if (interval_sec <= 0) out.push_back("interval_sec must be positive");

  std::set<std::string> dirs;
  for (const auto& d : directions) {
    if (!dirs.insert(d).second) out.push_back("duplicate direction '" + d + "'");
  }
  std::set<std::string> ids;
  for (const auto& m : movements) {
    if (!ids.insert(m.id).second) out.push_back("duplicate movement '" + m.id + "'");
    if (!dirs.count(m.upstream)) {
      out.push_back("movement '" + m.id + "' references unknown upstream direction '" + m.upstream + "'");
    }
    if (!dirs.count(m.downstream)) {
      out.push_back("movement '" + m.id + "' references unknown downstream direction '" + m.downstream + "'");
    }
    if (m.upstream == m.downstream) {
      out.push_back("movement '" + m.id + "' has identical upstream and downstream");
    }
  }
  return out;
}

void InterchangeSpec::validate() const {
  auto v = violations();
  if (!v.empty()) throw ValidationError(std::move(v));
}

InterchangeSpec interchange_from_json(const nlohmann::json& doc) {
  InterchangeSpec spec;
  spec.name = require<std::string>(doc, "name", "");
  spec.interval_sec = require<std::int64_t>(doc, "interval_sec", "");
  spec.directions = require<std::vector<std::string>>(doc, "directions", "");
  const auto movements = require<nlohmann::json>(doc, "movements", "");
  if (!movements.is_array()) throw ParseError("field 'movements' has the wrong type");
  for (std::size_t i = 0; i < movements.size(); ++i) {
    const auto where = "movements[" + std::to_string(i) + "].";
    const auto& m = movements[i];
    spec.movements.push_back({require<std::string>(m, "id", where), require<std::string>(m, "upstream", where),
                              require<std::string>(m, "downstream", where), require<std::string>(m, "label", where)});
  }
  spec.validate();
  return spec;
}

nlohmann::json interchange_to_json(const InterchangeSpec& spec) {
  nlohmann::json doc;
  doc["name"] = spec.name;
  doc["interval_sec"] = spec.interval_sec;
  doc["directions"] = spec.directions;
  doc["movements"] = nlohmann::json::array();
  for (const auto& m : spec.movements) {
    doc["movements"].push_back({{"id", m.id}, {"upstream", m.upstream}, {"downstream", m.downstream}, {"label", m.label}});
  }
  return doc;
}

InterchangeSpec load_interchange(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open interchange spec '" + path.string() + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("interchange spec '" + path.string() + "' is not valid JSON: " + e.what());
  }
  return interchange_from_json(doc);
}

void save_interchange(const InterchangeSpec& spec, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
  out << interchange_to_json(spec).dump(2) << '\n';
}

Adjacency full_adjacency(const InterchangeSpec& spec) {
  const auto m = spec.num_movements();
  Adjacency adj(m);
  for (std::int64_t i = 0; i < m; ++i) {
    for (std::int64_t j = 0; j < m; ++j) adj(i, j) = i == j ? 0 : 1;
  }
  return adj;
}

std::pair<std::string, std::string> movement_endpoints(const InterchangeSpec& spec, const std::string& movement_id) {
  const auto& m = spec.movements.at(spec.movement_index(movement_id));
  return {m.upstream, m.downstream};
}

InterchangeSpec default_interchange(std::int64_t interval_sec) {
  InterchangeSpec spec;
  spec.name = "double-cross";
  spec.interval_sec = interval_sec;
  const std::vector<std::string> approaches{"E", "W", "S", "N"};
  for (const auto& a : approaches) {
    spec.directions.push_back(a + "-up");
    spec.directions.push_back(a + "-down");
  }
  for (const auto& from : approaches) {
    for (const auto& to : approaches) {
      if (from == to) continue;
      const auto label = from + " to " + to;
      spec.movements.push_back({label, from + "-up", to + "-down", label});
    }
  }
  return spec;
}

}  // namespace ramp_stdae
