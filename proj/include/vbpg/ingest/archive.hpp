#pragma once

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vbpg/core/error.hpp"
#include "vbpg/core/types.hpp"

namespace vbpg::ingest {

// Canonical point-log archive: one JSON object per line, one PointLog each.

inline nlohmann::json to_json(const ContactRecord& c) {
  nlohmann::json j;
  j["player"] = c.player;
  j["team"] = c.team;
  j["conference"] = c.conference;
  j["skill"] = std::string(skill_name(c.skill));
  j["eval"] = std::string(1, eval_symbol(c.eval));
  j["possession"] = c.possession_index;
  if (c.attack_code) j["attack_code"] = *c.attack_code;
  if (c.start_xy) j["start_xy"] = {c.start_xy->first, c.start_xy->second};
  if (c.end_zone) j["end_zone"] = c.end_zone->value();
  j["row"] = c.source_row;
  return j;
}

inline nlohmann::json to_json(const PointLog& p) {
  nlohmann::json j;
  j["match_id"] = p.match_id;
  j["set"] = p.set_number;
  j["point"] = p.point_index;
  j["serving_team"] = p.serving_team;
  j["receiving_team"] = p.receiving_team;
  j["serving_conference"] = p.serving_conference;
  j["receiving_conference"] = p.receiving_conference;
  j["winner"] = p.winner;
  j["unterminated"] = p.unterminated;
  auto contacts = nlohmann::json::array();
  for (const auto& c : p.contacts) contacts.push_back(to_json(c));
  j["contacts"] = std::move(contacts);
  auto lineups = nlohmann::json::array();
  for (const auto& l : p.lineups)
    lineups.push_back({{"team", l.team}, {"slots", l.slots}, {"setter_slot", l.setter_slot}});
  j["lineups"] = std::move(lineups);
  auto libs = nlohmann::json::object();
  for (const auto& [t, pl] : p.liberos) libs[t] = pl;
  j["liberos"] = std::move(libs);
  return j;
}

inline PointLog point_from_json(const nlohmann::json& j) {
  PointLog p;
  p.match_id = j.at("match_id").get<std::string>();
  p.set_number = j.at("set").get<int>();
  p.point_index = j.at("point").get<int>();
  p.serving_team = j.at("serving_team").get<std::string>();
  p.receiving_team = j.at("receiving_team").get<std::string>();
  p.serving_conference = j.value("serving_conference", "");
  p.receiving_conference = j.value("receiving_conference", "");
  p.winner = j.at("winner").get<std::string>();
  p.unterminated = j.value("unterminated", false);
  for (const auto& cj : j.at("contacts")) {
    ContactRecord c;
    c.match_id = p.match_id;
    c.set_number = p.set_number;
    c.point_index = p.point_index;
    c.player = cj.at("player").get<std::string>();
    c.team = cj.at("team").get<std::string>();
    c.conference = cj.value("conference", "");
    auto skill = parse_skill(cj.at("skill").get<std::string>());
    auto eval = parse_eval(cj.at("eval").get<std::string>());
    if (!skill || !eval) fail(ErrorKind::BadField, "archive contact with unknown skill/eval");
    c.skill = *skill;
    c.eval = *eval;
    c.possession_index = cj.value("possession", 0);
    if (cj.contains("attack_code")) c.attack_code = cj.at("attack_code").get<std::string>();
    if (cj.contains("start_xy")) c.start_xy = std::make_pair(cj.at("start_xy")[0].get<double>(), cj.at("start_xy")[1].get<double>());
    if (cj.contains("end_zone")) c.end_zone = CourtZone(cj.at("end_zone").get<int>());
    c.source_row = cj.value("row", std::size_t{0});
    p.contacts.push_back(std::move(c));
  }
  for (const auto& lj : j.at("lineups")) {
    TeamLineup l;
    l.team = lj.at("team").get<std::string>();
    l.slots = lj.at("slots").get<std::array<std::string, 6>>();
    l.setter_slot = lj.at("setter_slot").get<int>();
    p.lineups.push_back(std::move(l));
  }
  if (j.contains("liberos"))
    for (auto& [t, pl] : j.at("liberos").items()) p.liberos.emplace_back(t, pl.get<std::string>());
  return p;
}

inline void write_archive(std::ostream& out, const std::vector<PointLog>& points) {
  for (const auto& p : points) out << to_json(p).dump() << '\n';
}

inline void write_archive(const std::string& path, const std::vector<PointLog>& points) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::MissingInput, "cannot write " + path);
  write_archive(out, points);
}

inline std::vector<PointLog> read_archive(std::istream& in) {
  std::vector<PointLog> points;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      points.push_back(point_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::BadField, "archive line " + std::to_string(n) + ": " + e.what());
    }
  }
  return points;
}

inline std::vector<PointLog> read_archive(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::MissingInput, "cannot open archive " + path);
  return read_archive(in);
}

}  // namespace vbpg::ingest
