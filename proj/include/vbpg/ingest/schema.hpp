#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "vbpg/core/error.hpp"

namespace vbpg::ingest {

/// Maps semantic fields onto header names of the delimited inputs. Loaded
/// from a JSON sidecar; every key is optional and falls back to the field
/// name itself.
struct Schema {
  char delimiter = ',';
  std::string point_row_value = "point";
  std::string contact_row_value = "contact";
  std::map<std::string, std::string> contact_columns;
  std::map<std::string, std::string> lineup_columns;

  static const std::vector<std::string>& contact_fields() {
    static const std::vector<std::string> f{
        "row_type", "match_id", "set", "point", "possession", "player", "team",
        "conference", "skill", "eval", "attack_code", "start_xy", "end_zone",
        "serving_team", "receiving_team", "winner"};
    return f;
  }
  static const std::vector<std::string>& required_contact_fields() {
    static const std::vector<std::string> f{
        "row_type", "match_id", "set", "point", "player", "team", "skill", "eval",
        "serving_team", "receiving_team", "winner"};
    return f;
  }
  static const std::vector<std::string>& lineup_fields() {
    static const std::vector<std::string> f{
        "match_id", "set", "point", "team", "slot1", "slot2", "slot3",
        "slot4", "slot5", "slot6", "setter_slot"};
    return f;
  }

  std::string contact_column(const std::string& field) const {
    auto it = contact_columns.find(field);
    return it == contact_columns.end() ? field : it->second;
  }
  std::string lineup_column(const std::string& field) const {
    auto it = lineup_columns.find(field);
    return it == lineup_columns.end() ? field : it->second;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["delimiter"] = std::string(1, delimiter);
    j["point_row_value"] = point_row_value;
    j["contact_row_value"] = contact_row_value;
    nlohmann::json cc = nlohmann::json::object();
    for (const auto& f : contact_fields()) cc[f] = contact_column(f);
    j["contact_columns"] = cc;
    nlohmann::json lc = nlohmann::json::object();
    for (const auto& f : lineup_fields()) lc[f] = lineup_column(f);
    j["lineup_columns"] = lc;
    return j;
  }

  static Schema from_json(const nlohmann::json& j) {
    Schema s;
    if (j.contains("delimiter")) {
      auto d = j.at("delimiter").get<std::string>();
      if (d == "\\t" || d == "tab") d = "\t";
      if (d.size() != 1) fail(ErrorKind::InvalidConfig, "delimiter must be a single character");
      s.delimiter = d[0];
    }
    if (j.contains("point_row_value")) s.point_row_value = j.at("point_row_value").get<std::string>();
    if (j.contains("contact_row_value")) s.contact_row_value = j.at("contact_row_value").get<std::string>();
    if (j.contains("contact_columns"))
      for (auto& [k, v] : j.at("contact_columns").items()) s.contact_columns[k] = v.get<std::string>();
    if (j.contains("lineup_columns"))
      for (auto& [k, v] : j.at("lineup_columns").items()) s.lineup_columns[k] = v.get<std::string>();
    return s;
  }

  static Schema load(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::MissingInput, "cannot open schema " + path);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::InvalidConfig, "schema " + path + ": " + e.what());
    }
    return from_json(j);
  }
};

}  // namespace vbpg::ingest
