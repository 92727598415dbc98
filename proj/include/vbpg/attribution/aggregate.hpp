#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "vbpg/attribution/points_gained.hpp"
#include "vbpg/core/error.hpp"
#include "vbpg/io/csv.hpp"

namespace vbpg::attribution {

enum class Level : std::uint8_t { Player, Team, Conference };
enum class Basis : std::uint8_t { PerSet, PerContact, PerOpportunity };

inline Level parse_level(const std::string& s) {
  if (s == "player") return Level::Player;
  if (s == "team") return Level::Team;
  if (s == "conference") return Level::Conference;
  fail(ErrorKind::Usage, "unknown level '" + s + "' (player, team, conference)");
}
inline Basis parse_basis(const std::string& s) {
  if (s == "per_set") return Basis::PerSet;
  if (s == "per_contact") return Basis::PerContact;
  if (s == "per_opportunity") return Basis::PerOpportunity;
  fail(ErrorKind::Usage, "unknown basis '" + s + "' (per_set, per_contact, per_opportunity)");
}

/// Report columns: serve, pass (reception and dig), set, attack, block.
enum class Column : std::uint8_t { SRV, PASS, SET, ATT, BLK };
inline constexpr std::array<std::string_view, 5> kColumnNames{"SRV", "PASS", "SET", "ATT", "BLK"};

inline Column column_of(PgRole r) {
  switch (r) {
    case PgRole::Server: return Column::SRV;
    case PgRole::Receiver:
    case PgRole::Digger: return Column::PASS;
    case PgRole::Setter: return Column::SET;
    case PgRole::Attacker: return Column::ATT;
    case PgRole::Blocker: return Column::BLK;
  }
  return Column::SRV;
}

/// Who played which sets, and each player's usual role.
struct Participation {
  std::map<PlayerId, std::set<std::pair<MatchId, int>>> player_sets;
  std::map<TeamId, std::set<std::pair<MatchId, int>>> team_sets;
  std::map<PlayerId, TeamId> team_of;
  std::map<TeamId, ConferenceId> conference_of;
  std::map<PlayerId, std::array<std::size_t, 5>> role_counts;  // S, OH, MB, OPP, L
  std::size_t points = 0;

  void add(const PointLog& p) {
    ++points;
    const std::pair<MatchId, int> set{p.match_id, p.set_number};
    for (const TeamId& t : {p.serving_team, p.receiving_team}) {
      team_sets[t].insert(set);
      const ConferenceId& c = p.conference_of(t);
      if (!c.empty()) conference_of.emplace(t, c);
    }
    for (const auto& l : p.lineups)
      for (int slot = 1; slot <= 6; ++slot) {
        const PlayerId& pl = l.at(slot);
        if (pl.empty()) continue;
        player_sets[pl].insert(set);
        team_of.emplace(pl, l.team);
        ++role_counts[pl][static_cast<std::size_t>(role_of_slot(slot, l.setter_slot))];
      }
    for (const auto& [t, lib] : p.liberos)
      if (!lib.empty()) {
        ++role_counts[lib][4];
        team_of.emplace(lib, t);
      }
    for (const auto& c : p.contacts) {
      player_sets[c.player].insert(set);
      team_of.emplace(c.player, c.team);
    }
  }

  static Participation of(const std::vector<PointLog>& points) {
    Participation p;
    for (const auto& pt : points) p.add(pt);
    return p;
  }

  std::string position(const PlayerId& p) const {
    auto it = role_counts.find(p);
    if (it == role_counts.end()) return "DS";
    static constexpr std::array<std::string_view, 5> names{"S", "OH", "MB", "OPP", "L"};
    const auto& c = it->second;
    return std::string(names[static_cast<std::size_t>(std::max_element(c.begin(), c.end()) - c.begin())]);
  }
  std::size_t sets_of_player(const PlayerId& p) const {
    auto it = player_sets.find(p);
    return it == player_sets.end() ? 0 : it->second.size();
  }
  std::size_t sets_of_team(const TeamId& t) const {
    auto it = team_sets.find(t);
    return it == team_sets.end() ? 0 : it->second.size();
  }
  std::size_t sets_of_conference(const ConferenceId& c) const {
    std::size_t n = 0;
    for (const auto& [t, conf] : conference_of)
      if (conf == c) n += sets_of_team(t);
    return n;
  }
};

struct AggregateRow {
  std::string entity;
  TeamId team;
  ConferenceId conference;
  std::string position;
  std::size_t sets = 0;
  std::size_t contacts = 0;       // distinct contacts actually made
  std::size_t opportunities = 0;  // distinct contacts made or assigned
  std::array<double, 5> raw{}, adjusted{};
  double sos = 0.0;
  double denominator = 1.0;

  double raw_total() const { return raw[0] + raw[1] + raw[2] + raw[3] + raw[4]; }
  double adjusted_total() const { return adjusted[0] + adjusted[1] + adjusted[2] + adjusted[3] + adjusted[4]; }
  double per(double v) const { return denominator > 0.0 ? v / denominator : 0.0; }
};

struct AggregateOptions {
  std::size_t min_contacts = 0;
  std::size_t min_sets = 0;
};

inline std::string entity_of(const PointsGainedEntry& e, Level level) {
  switch (level) {
    case Level::Player: return e.player;
    case Level::Team: return e.team;
    case Level::Conference: return e.conference;
  }
  return {};
}

/// Sums raw and adjusted PG per entity and skill column, then divides by
/// the basis (sets played, contacts made, or contacts made or assigned).
inline std::vector<AggregateRow> aggregate(const std::vector<PointsGainedEntry>& entries, const Participation& part,
                                           Level level, Basis basis, const AggregateOptions& opt = {}) {
  std::map<std::string, AggregateRow> rows;
  std::map<std::string, std::set<std::pair<sos::ContactRef, int>>> made, assigned;
  for (const auto& e : entries) {
    const std::string key = entity_of(e, level);
    AggregateRow& r = rows[key];
    r.entity = key;
    const auto c = static_cast<std::size_t>(column_of(e.role));
    r.raw[c] += e.raw_pg;
    r.adjusted[c] += e.adjusted_pg;
    r.sos += e.sos;
    const std::pair<sos::ContactRef, int> id{e.ref, static_cast<int>(e.role)};
    assigned[key].insert(id);
    if (e.observed) made[key].insert(id);
  }
  std::vector<AggregateRow> out;
  for (auto& [key, r] : rows) {
    switch (level) {
      case Level::Player: {
        auto it = part.team_of.find(key);
        if (it == part.team_of.end()) fail(ErrorKind::UnknownEntity, "player '" + key + "' has no recorded sets");
        r.team = it->second;
        auto ct = part.conference_of.find(r.team);
        r.conference = ct == part.conference_of.end() ? "" : ct->second;
        r.position = part.position(key);
        r.sets = part.sets_of_player(key);
        break;
      }
      case Level::Team: {
        r.team = key;
        auto ct = part.conference_of.find(key);
        if (!part.team_sets.contains(key)) fail(ErrorKind::UnknownEntity, "team '" + key + "' has no recorded sets");
        r.conference = ct == part.conference_of.end() ? "" : ct->second;
        r.sets = part.sets_of_team(key);
        break;
      }
      case Level::Conference:
        r.conference = key;
        r.sets = part.sets_of_conference(key);
        if (r.sets == 0) fail(ErrorKind::UnknownEntity, "conference '" + key + "' has no recorded sets");
        break;
    }
    r.contacts = made[key].size();
    r.opportunities = assigned[key].size();
    switch (basis) {
      case Basis::PerSet: r.denominator = static_cast<double>(r.sets); break;
      case Basis::PerContact: r.denominator = static_cast<double>(r.contacts); break;
      case Basis::PerOpportunity: r.denominator = static_cast<double>(r.opportunities); break;
    }
    if (r.contacts < opt.min_contacts || r.sets < opt.min_sets) continue;
    out.push_back(std::move(r));
  }
  std::stable_sort(out.begin(), out.end(), [](const AggregateRow& a, const AggregateRow& b) {
    return a.per(a.adjusted_total()) > b.per(b.adjusted_total());
  });
  return out;
}

inline const AggregateRow& find_row(const std::vector<AggregateRow>& rows, const std::string& entity) {
  for (const auto& r : rows)
    if (r.entity == entity) return r;
  fail(ErrorKind::UnknownEntity, "no aggregate row for '" + entity + "'");
}

/// Full-precision aggregate table.
inline void write_aggregate_csv(std::ostream& os, const std::vector<AggregateRow>& rows) {
  io::CsvWriter w(os);
  std::vector<std::string> head{"entity", "team", "conference", "position", "sets", "contacts", "opportunities",
                                "denominator", "raw_total", "adjusted_total", "sos"};
  for (auto c : kColumnNames) head.push_back("raw_" + std::string(c));
  for (auto c : kColumnNames) head.push_back("adj_" + std::string(c));
  w.row(head);
  for (const auto& r : rows) {
    std::vector<std::string> row{r.entity, r.team, r.conference, r.position, std::to_string(r.sets),
                                 std::to_string(r.contacts), std::to_string(r.opportunities), io::exact(r.denominator),
                                 io::exact(r.per(r.raw_total())), io::exact(r.per(r.adjusted_total())),
                                 io::exact(r.per(r.sos))};
    for (double v : r.raw) row.push_back(io::exact(r.per(v)));
    for (double v : r.adjusted) row.push_back(io::exact(r.per(v)));
    w.row(row);
  }
}

/// Player table: PLAYER, TEAM, CONF, POS, SETS, PG*/S and the skill split,
/// two decimals with explicit sign.
inline void write_player_table(std::ostream& os, const std::vector<AggregateRow>& rows, std::size_t top,
                               bool adjusted = true) {
  io::CsvWriter w(os);
  w.row({"PLAYER", "TEAM", "CONF", "POS", "SETS", adjusted ? "PG*/S" : "PG/S", "SRV", "PASS", "SET", "ATT", "BLK"});
  for (std::size_t i = 0; i < rows.size() && i < top; ++i) {
    const auto& r = rows[i];
    const auto& v = adjusted ? r.adjusted : r.raw;
    std::vector<std::string> row{r.entity, r.team, r.conference, r.position, std::to_string(r.sets),
                                 io::signed_fixed(r.per(adjusted ? r.adjusted_total() : r.raw_total()), 2)};
    for (double x : v) row.push_back(io::signed_fixed(r.per(x), 2));
    w.row(row);
  }
}

/// Conference table of mean strength of schedule per set, highest first.
inline void write_conference_sos(std::ostream& os, std::vector<AggregateRow> rows, std::size_t top) {
  std::stable_sort(rows.begin(), rows.end(),
                   [](const AggregateRow& a, const AggregateRow& b) { return a.per(a.sos) > b.per(b.sos); });
  io::CsvWriter w(os);
  w.row({"Conference", "Avg SoS"});
  for (std::size_t i = 0; i < rows.size() && i < top; ++i)
    w.row({rows[i].entity, io::signed_fixed(rows[i].per(rows[i].sos), 2)});
}

// ---------------------------------------------------------------------------
// Histograms
// ---------------------------------------------------------------------------

struct Histogram {
  std::vector<double> edges;
  std::vector<std::size_t> counts;
};

/// Equal-width bins over [min, max]; the top edge is closed.
inline Histogram histogram(const std::vector<double>& values, std::size_t bins) {
  Histogram h;
  if (values.empty() || bins == 0) return h;
  double lo = *std::min_element(values.begin(), values.end());
  double hi = *std::max_element(values.begin(), values.end());
  if (hi == lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) h.edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  h.counts.assign(bins, 0);
  for (double v : values) {
    auto b = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
    ++h.counts[std::min(b, bins - 1)];
  }
  return h;
}

inline void write_histogram(std::ostream& os, const std::string& series, const Histogram& h) {
  io::CsvWriter w(os);
  for (std::size_t i = 0; i < h.counts.size(); ++i)
    w.row({series, io::exact(h.edges[i]), io::exact(h.edges[i + 1]), std::to_string(h.counts[i])});
}

/// Minimum contacts per player for the per-contact skill histograms.
inline std::size_t default_min_contacts(SkillType s) {
  switch (s) {
    case SkillType::Serve: return 100;
    case SkillType::Set: return 1000;
    case SkillType::Attack: return 200;
    case SkillType::Reception: return 100;
    case SkillType::Dig: return 100;
    case SkillType::Block: return 200;
  }
  return 0;
}

/// Per-player mean raw PG per contact of one skill, for players above the
/// skill's minimum contact count.
inline std::vector<double> per_contact_by_skill(const std::vector<PointsGainedEntry>& entries, SkillType skill,
                                                std::size_t min_contacts) {
  std::map<PlayerId, std::pair<double, std::set<sos::ContactRef>>> acc;
  for (const auto& e : entries) {
    if (skill_of(e.role) != skill || !e.observed) continue;
    auto& a = acc[e.player];
    a.first += e.raw_pg;
    a.second.insert(e.ref);
  }
  std::vector<double> out;
  for (const auto& [p, a] : acc)
    if (a.second.size() >= min_contacts && !a.second.empty())
      out.push_back(a.first / static_cast<double>(a.second.size()));
  return out;
}

}  // namespace vbpg::attribution
