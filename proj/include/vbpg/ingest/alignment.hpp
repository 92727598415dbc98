#pragma once

#include <array>
#include <optional>

#include "vbpg/core/error.hpp"
#include "vbpg/core/types.hpp"

namespace vbpg::ingest {

/// Defensive position -> player for one team on one point.
struct DefensiveAlignment {
  std::array<PlayerId, 6> players;  // indexed by Position

  const PlayerId& at(Position p) const { return players[static_cast<std::size_t>(p)]; }
  PlayerId& at(Position p) { return players[static_cast<std::size_t>(p)]; }

  std::optional<Position> position_of(const PlayerId& player) const {
    for (Position p : kAllPositions)
      if (at(p) == player) return p;
    return std::nullopt;
  }
  friend bool operator==(const DefensiveAlignment&, const DefensiveAlignment&) = default;
};

/// Assumed base defense: front row OH/MB/OPP left to right, setter back
/// right, back-row OH in the middle and the back-row MB (or the libero who
/// replaces her) back left. A front-row setter swaps with the opposite.
inline DefensiveAlignment resolve_defensive_positions(const TeamLineup& lineup,
                                                      const std::optional<PlayerId>& libero) {
  if (lineup.setter_slot < 1 || lineup.setter_slot > 6)
    fail(ErrorKind::IncompleteLineup, "setter slot unknown for team " + lineup.team);
  for (const auto& p : lineup.slots)
    if (p.empty()) fail(ErrorKind::IncompleteLineup, "unfilled rotation slot for team " + lineup.team);

  DefensiveAlignment a;
  for (int slot = 1; slot <= 6; ++slot) {
    const bool front = slot_is_front(slot);
    const PlayerId& player = lineup.at(slot);
    switch (role_of_slot(slot, lineup.setter_slot)) {
      case Role::S: a.at(front ? Position::FR : Position::BR) = player; break;
      case Role::OPP: a.at(front ? Position::FR : Position::BR) = player; break;
      case Role::OH: a.at(front ? Position::FL : Position::BM) = player; break;
      case Role::MB:
        a.at(front ? Position::FM : Position::BL) = (!front && libero && !libero->empty()) ? *libero : player;
        break;
    }
  }
  return a;
}

}  // namespace vbpg::ingest
