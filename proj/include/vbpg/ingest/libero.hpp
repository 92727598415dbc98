#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "vbpg/core/error.hpp"
#include "vbpg/core/types.hpp"

namespace vbpg::ingest {

struct TeamSetKey {
  MatchId match_id;
  int set_number = 1;
  TeamId team;
  friend auto operator<=>(const TeamSetKey&, const TeamSetKey&) = default;
};

struct AmbiguousLibero {
  TeamSetKey key;
  std::vector<PlayerId> candidates;
};

struct LiberoInference {
  std::map<TeamSetKey, std::optional<PlayerId>> liberos;
  std::vector<AmbiguousLibero> ambiguous;

  std::optional<PlayerId> get(const TeamSetKey& k) const {
    auto it = liberos.find(k);
    return it == liberos.end() ? std::nullopt : it->second;
  }
};

/// The libero never appears in a lineup slot but does touch the ball, so per
/// team and set she is the unique contacting player absent from every lineup
/// row of that set. Ambiguous team-sets get no libero and are listed.
inline LiberoInference infer_liberos(const std::vector<ContactRecord>& contacts,
                                     const std::vector<LineupState>& lineups) {
  std::map<TeamSetKey, std::set<PlayerId>> in_lineup;
  for (const auto& ls : lineups)
    for (const auto& t : ls.teams) {
      auto& s = in_lineup[{ls.match_id, ls.set_number, t.team}];
      s.insert(t.slots.begin(), t.slots.end());
    }
  std::map<TeamSetKey, std::set<PlayerId>> off_lineup;
  std::set<TeamSetKey> seen;
  for (const auto& c : contacts) {
    TeamSetKey k{c.match_id, c.set_number, c.team};
    seen.insert(k);
    auto it = in_lineup.find(k);
    if (it == in_lineup.end() || !it->second.contains(c.player)) off_lineup[k].insert(c.player);
  }
  LiberoInference out;
  for (const auto& k : seen) {
    auto it = off_lineup.find(k);
    if (it == off_lineup.end() || it->second.empty()) {
      out.liberos[k] = std::nullopt;
    } else if (it->second.size() == 1) {
      out.liberos[k] = *it->second.begin();
    } else {
      out.liberos[k] = std::nullopt;
      out.ambiguous.push_back({k, std::vector<PlayerId>(it->second.begin(), it->second.end())});
    }
  }
  return out;
}

/// Throwing form: any team-set with two or more off-lineup contributors is an
/// AmbiguousLibero error listing every candidate.
inline std::map<TeamSetKey, std::optional<PlayerId>> infer_libero(const std::vector<ContactRecord>& contacts,
                                                                  const std::vector<LineupState>& lineups) {
  auto r = infer_liberos(contacts, lineups);
  if (!r.ambiguous.empty()) {
    std::string msg;
    for (const auto& a : r.ambiguous) {
      msg += a.key.match_id + "/set " + std::to_string(a.key.set_number) + "/" + a.key.team + " candidates=" +
             std::to_string(a.candidates.size()) + " [";
      for (std::size_t i = 0; i < a.candidates.size(); ++i) msg += (i ? ", " : "") + a.candidates[i];
      msg += "]; ";
    }
    fail(ErrorKind::AmbiguousLibero, msg);
  }
  return r.liberos;
}

}  // namespace vbpg::ingest
