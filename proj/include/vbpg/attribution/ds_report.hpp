#pragma once

#include <array>
#include <cmath>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "vbpg/attribution/points_gained.hpp"
#include "vbpg/core/error.hpp"
#include "vbpg/core/types.hpp"

namespace vbpg::attribution {

/// Outside-hitter usage classes read off where a player stands when her
/// rotation slot carries the OH role.
enum class OhClass : std::uint8_t { AllAround, FrontOnly, Specialist };

inline constexpr std::string_view oh_class_name(OhClass c) {
  switch (c) {
    case OhClass::AllAround: return "all_around_oh";
    case OhClass::FrontOnly: return "front_only_oh";
    case OhClass::Specialist: return "defensive_specialist";
  }
  return "?";
}

struct DsOptions {
  std::size_t min_points = 20;         // OH-slot appearances needed to classify a player
  double front_only_share = 0.8;       // front-row share at or above: front-only OH
  double specialist_share = 0.2;       // front-row share at or below: DS
  std::size_t min_opportunities = 30;  // per compared class
  bool adjusted = false;
};

struct ClassSummary {
  std::size_t players = 0;
  std::size_t opportunities = 0;
  double mean = 0.0;  // pooled PG per reception opportunity
  double variance = 0.0;
  std::vector<double> player_means;
};

struct DsReport {
  std::map<PlayerId, OhClass> classes;
  std::array<ClassSummary, 3> summary;
  double delta = 0.0;  // specialist minus front-only OH, per opportunity
  double delta_se = 0.0;
  double opportunities_per_point = 0.0;
  double implied_point_delta = 0.0;

  nlohmann::json to_json() const {
    nlohmann::json j;
    for (std::size_t c = 0; c < 3; ++c) {
      const auto& s = summary[c];
      j["classes"][std::string(oh_class_name(static_cast<OhClass>(c)))] = {
          {"players", s.players}, {"opportunities", s.opportunities}, {"mean", s.mean}, {"variance", s.variance}};
    }
    j["delta_per_opportunity"] = delta;
    j["delta_se"] = delta_se;
    j["substitutable_opportunities_per_point"] = opportunities_per_point;
    j["implied_point_win_delta"] = implied_point_delta;
    return j;
  }
};

inline std::map<PlayerId, OhClass> classify_outside_hitters(const std::vector<PointLog>& points,
                                                            const DsOptions& opt = {}) {
  std::map<PlayerId, std::array<std::size_t, 2>> rows;  // front, back
  for (const auto& p : points)
    for (const auto& l : p.lineups)
      for (int slot = 1; slot <= 6; ++slot)
        if (role_of_slot(slot, l.setter_slot) == Role::OH && !l.at(slot).empty())
          ++rows[l.at(slot)][slot_is_front(slot) ? 0 : 1];
  std::map<PlayerId, OhClass> out;
  for (const auto& [player, n] : rows) {
    const std::size_t total = n[0] + n[1];
    if (total < opt.min_points) continue;
    const double front = static_cast<double>(n[0]) / static_cast<double>(total);
    if (front >= opt.front_only_share)
      out[player] = OhClass::FrontOnly;
    else if (front <= opt.specialist_share)
      out[player] = OhClass::Specialist;
    else
      out[player] = OhClass::AllAround;
  }
  return out;
}

/// Compares reception PG per opportunity of defensive specialists with the
/// front-only outside hitters they replace, and scales the gap by how many
/// receptions per point the substitution hands to the specialist.
inline DsReport ds_substitution_report(const std::vector<PointsGainedEntry>& entries,
                                       const std::vector<PointLog>& points, const DsOptions& opt = {}) {
  DsReport r;
  r.classes = classify_outside_hitters(points, opt);
  std::array<std::vector<double>, 3> values;
  std::map<PlayerId, std::pair<double, std::size_t>> per_player;
  std::set<TeamId> ds_teams;
  std::size_t ds_receptions = 0;
  for (const auto& e : entries) {
    if (e.role != PgRole::Receiver) continue;
    auto it = r.classes.find(e.player);
    if (it == r.classes.end()) continue;
    const double v = opt.adjusted ? e.adjusted_pg : e.raw_pg;
    values[static_cast<std::size_t>(it->second)].push_back(v);
    auto& pp = per_player[e.player];
    pp.first += v;
    ++pp.second;
    if (it->second == OhClass::Specialist) {
      ++ds_receptions;
      ds_teams.insert(e.team);
    }
  }
  for (std::size_t c = 0; c < 3; ++c) {
    auto& s = r.summary[c];
    s.opportunities = values[c].size();
    if (!values[c].empty()) {
      double sum = 0.0;
      for (double v : values[c]) sum += v;
      s.mean = sum / static_cast<double>(values[c].size());
      double ss = 0.0;
      for (double v : values[c]) ss += (v - s.mean) * (v - s.mean);
      s.variance = values[c].size() > 1 ? ss / static_cast<double>(values[c].size() - 1) : 0.0;
    }
  }
  for (const auto& [player, cls] : r.classes) {
    auto& s = r.summary[static_cast<std::size_t>(cls)];
    ++s.players;
    auto it = per_player.find(player);
    if (it != per_player.end()) s.player_means.push_back(it->second.first / static_cast<double>(it->second.second));
  }
  const auto& ds = r.summary[static_cast<std::size_t>(OhClass::Specialist)];
  const auto& fo = r.summary[static_cast<std::size_t>(OhClass::FrontOnly)];
  if (ds.opportunities < opt.min_opportunities || fo.opportunities < opt.min_opportunities)
    fail(ErrorKind::InsufficientClassData,
         "need " + std::to_string(opt.min_opportunities) + " reception opportunities per class; specialists have " +
             std::to_string(ds.opportunities) + ", front-only outside hitters " + std::to_string(fo.opportunities));
  r.delta = ds.mean - fo.mean;
  r.delta_se = std::sqrt(ds.variance / static_cast<double>(ds.opportunities) +
                         fo.variance / static_cast<double>(fo.opportunities));
  std::size_t team_points = 0;
  for (const auto& p : points)
    for (const TeamId& t : {p.serving_team, p.receiving_team})
      if (ds_teams.contains(t)) ++team_points;
  r.opportunities_per_point = team_points ? static_cast<double>(ds_receptions) / static_cast<double>(team_points) : 0.0;
  r.implied_point_delta = r.delta * r.opportunities_per_point;
  return r;
}

}  // namespace vbpg::attribution
