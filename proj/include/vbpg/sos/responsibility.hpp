#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "vbpg/core/error.hpp"
#include "vbpg/core/types.hpp"
#include "vbpg/ingest/alignment.hpp"
#include "vbpg/io/csv.hpp"
#include "vbpg/sos/outcome.hpp"

namespace vbpg::sos {

inline constexpr std::uint64_t kResponsibilitySupport = 25;

enum class Provenance : std::uint8_t { Observed, Inferred, BackOff };

inline constexpr std::string_view provenance_name(Provenance p) {
  switch (p) {
    case Provenance::Observed: return "observed";
    case Provenance::Inferred: return "inferred";
    case Provenance::BackOff: return "backoff";
  }
  return "?";
}

/// Left/middle/right column of a position; the attacker's column stands in
/// for the attack code when a code is too rare.
inline char position_family(std::optional<Position> p) {
  if (!p) return '?';
  switch (*p) {
    case Position::FL: case Position::BL: return 'L';
    case Position::FM: case Position::BM: return 'M';
    case Position::FR: case Position::BR: return 'R';
  }
  return '?';
}

inline std::string_view band_name(int band) {
  static constexpr std::array<std::string_view, 3> n{"front", "mid", "deep"};
  return n[static_cast<std::size_t>(band)];
}

struct ResponsibilityCell {
  std::array<std::uint64_t, 6> counts{};
  std::uint64_t total = 0;

  /// Argmax with ties going to the earlier position in FL..BR order.
  Position modal(bool* tie = nullptr) const {
    std::size_t best = 0;
    bool tied = false;
    for (std::size_t i = 1; i < counts.size(); ++i) {
      if (counts[i] > counts[best]) {
        best = i;
        tied = false;
      } else if (counts[i] == counts[best] && counts[i] > 0) {
        tied = true;
      }
    }
    if (tie) *tie = tied;
    return kAllPositions[best];
  }
  double frequency() const {
    return total ? static_cast<double>(counts[static_cast<std::size_t>(modal())]) / static_cast<double>(total) : 0.0;
  }
};

struct Resolution {
  Position position = Position::FM;
  Provenance provenance = Provenance::Inferred;
  std::string key;
};

/// Blocker table keyed by attack code, digger table by (attack code, end
/// zone); both keep coarser keys for back-off.
class ResponsibilityTable {
 public:
  explicit ResponsibilityTable(std::uint64_t support = kResponsibilitySupport) : support_(support) {}

  std::uint64_t support() const { return support_; }

  static std::vector<std::string> blocker_keys(const std::string& code, char family) {
    return {"code:" + code, std::string("family:") + family, "*"};
  }
  static std::vector<std::string> digger_keys(const std::string& code, char family, std::optional<CourtZone> zone) {
    if (!zone) return {"*"};
    const std::string band(band_name(zone_band(*zone)));
    return {"code:" + code + "|zone:" + std::to_string(zone->value()), "code:" + code + "|band:" + band,
            std::string("family:") + family + "|band:" + band, "*"};
  }

  void add_block(const std::string& code, char family, Position p) {
    if (!is_front(p)) return;
    for (const auto& k : blocker_keys(code, family)) bump(blocker_[k], p);
  }
  void add_dig(const std::string& code, char family, std::optional<CourtZone> zone, Position p) {
    for (const auto& k : digger_keys(code, family, zone)) bump(digger_[k], p);
  }

  Resolution blocker_position(const std::string& code, char family) const {
    return resolve(blocker_, blocker_keys(code, family), Position::FM);
  }
  Resolution digger_position(const std::string& code, char family, std::optional<CourtZone> zone) const {
    return resolve(digger_, digger_keys(code, family, zone), Position::BM);
  }

  const std::map<std::string, ResponsibilityCell>& blocker() const { return blocker_; }
  const std::map<std::string, ResponsibilityCell>& digger() const { return digger_; }

  /// Keys whose modal position is tied.
  std::vector<std::string> ties() const {
    std::vector<std::string> out;
    for (const auto* t : {&blocker_, &digger_})
      for (const auto& [k, c] : *t) {
        bool tie = false;
        c.modal(&tie);
        if (tie) out.push_back((t == &blocker_ ? "blocker " : "digger ") + k);
      }
    return out;
  }

  void write_csv(std::ostream& os) const {
    io::CsvWriter w(os);
    w.row({"table", "key", "position", "count", "total", "frequency", "tie", "FL", "FM", "FR", "BL", "BM", "BR"});
    for (const auto* t : {&blocker_, &digger_})
      for (const auto& [k, c] : *t) {
        bool tie = false;
        const Position p = c.modal(&tie);
        std::vector<std::string> row{t == &blocker_ ? "blocker" : "digger", k, std::string(position_name(p)),
                                     std::to_string(c.counts[static_cast<std::size_t>(p)]), std::to_string(c.total),
                                     io::fixed(c.frequency(), 6), tie ? "1" : "0"};
        for (auto n : c.counts) row.push_back(std::to_string(n));
        w.row(row);
      }
  }

 private:
  static void bump(ResponsibilityCell& c, Position p) {
    ++c.counts[static_cast<std::size_t>(p)];
    ++c.total;
  }
  Resolution resolve(const std::map<std::string, ResponsibilityCell>& t, const std::vector<std::string>& keys,
                     Position fallback) const {
    const ResponsibilityCell* last = nullptr;
    std::string last_key;
    for (std::size_t i = 0; i < keys.size(); ++i) {
      auto it = t.find(keys[i]);
      if (it == t.end() || it->second.total == 0) continue;
      if (it->second.total >= support_)
        return {it->second.modal(), i == 0 ? Provenance::Inferred : Provenance::BackOff, keys[i]};
      last = &it->second;
      last_key = keys[i];
    }
    if (last) return {last->modal(), Provenance::BackOff, last_key};
    return {fallback, Provenance::BackOff, "default"};
  }

  std::uint64_t support_;
  std::map<std::string, ResponsibilityCell> blocker_, digger_;
};

/// Alignments of both teams for one point; absent when a lineup is missing.
struct PointAlignments {
  std::optional<ingest::DefensiveAlignment> serving, receiving;

  const std::optional<ingest::DefensiveAlignment>& of(const PointLog& p, const TeamId& t) const {
    return t == p.serving_team ? serving : receiving;
  }
};

inline PointAlignments alignments_of(const PointLog& p) {
  PointAlignments a;
  auto one = [&](const TeamId& t) -> std::optional<ingest::DefensiveAlignment> {
    const TeamLineup* l = p.lineup_of(t);
    if (!l) return std::nullopt;
    try {
      return ingest::resolve_defensive_positions(*l, p.libero_of(t));
    } catch (const Error&) {
      return std::nullopt;
    }
  };
  a.serving = one(p.serving_team);
  a.receiving = one(p.receiving_team);
  return a;
}

inline char attacker_family(const PointLog& p, const PointAlignments& al, const ContactRecord& attack) {
  const auto& own = al.of(p, attack.team);
  return position_family(own ? own->position_of(attack.player) : std::nullopt);
}

/// Adds one point's observed block and dig touches to the tables.
inline void add_point_responsibility(ResponsibilityTable& t, const PointLog& p, const PointAlignments& al,
                                     const PointOutcomes& outcomes) {
  for (const auto& l : outcomes.attacks) {
    const ContactRecord& a = p.contacts[l.contact];
    const auto& def = al.of(p, p.opponent_of(a.team));
    if (!def) continue;
    const std::string code = a.attack_code.value_or("");
    const char fam = attacker_family(p, al, a);
    if (l.block)
      if (auto pos = def->position_of(p.contacts[*l.block].player)) t.add_block(code, fam, *pos);
    if (l.dig)
      if (auto pos = def->position_of(p.contacts[*l.dig].player)) t.add_dig(code, fam, a.end_zone, *pos);
  }
}

inline ResponsibilityTable build_responsibility_tables(const std::vector<PointLog>& points,
                                                       std::uint64_t support = kResponsibilitySupport) {
  ResponsibilityTable t(support);
  for (const auto& p : points) add_point_responsibility(t, p, alignments_of(p), label_attack_outcomes(p));
  return t;
}

struct Assignment {
  PlayerId player;
  Provenance provenance = Provenance::Observed;
  std::optional<Position> position;
  std::string key;
};

/// Observed block toucher, else the defender standing at the table's position.
inline Assignment assign_blocker(const PointLog& p, const LabeledAttack& l, const ResponsibilityTable& t,
                                 const PointAlignments& al) {
  const ContactRecord& a = p.contacts[l.contact];
  const auto& def = al.of(p, p.opponent_of(a.team));
  if (l.block) {
    const PlayerId& b = p.contacts[*l.block].player;
    return {b, Provenance::Observed, def ? def->position_of(b) : std::nullopt, "touch"};
  }
  if (!def) fail(ErrorKind::NoAlignment, "no defensive alignment for " + p.opponent_of(a.team) + " in " + p.match_id);
  const Resolution r = t.blocker_position(a.attack_code.value_or(""), attacker_family(p, al, a));
  return {def->at(r.position), r.provenance, r.position, r.key};
}

inline Assignment assign_digger(const PointLog& p, const LabeledAttack& l, const ResponsibilityTable& t,
                                const PointAlignments& al) {
  const ContactRecord& a = p.contacts[l.contact];
  const auto& def = al.of(p, p.opponent_of(a.team));
  if (l.dig) {
    const PlayerId& d = p.contacts[*l.dig].player;
    return {d, Provenance::Observed, def ? def->position_of(d) : std::nullopt, "touch"};
  }
  if (!def) fail(ErrorKind::NoAlignment, "no defensive alignment for " + p.opponent_of(a.team) + " in " + p.match_id);
  const Resolution r = t.digger_position(a.attack_code.value_or(""), attacker_family(p, al, a), a.end_zone);
  return {def->at(r.position), r.provenance, r.position, r.key};
}

}  // namespace vbpg::sos
