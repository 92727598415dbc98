#pragma once

#include <string>
#include <vector>

#include "vbpg/core/error.hpp"
#include "vbpg/core/types.hpp"
#include "vbpg/markov/state.hpp"

namespace vbpg::markov {

inline Side side_of(const PointLog& p, const TeamId& team) {
  return team == p.serving_team ? Side::S : Side::R;
}

/// One state per contact followed by the terminal state of the winner.
/// A possession resets whenever the ball changes sides.
inline std::vector<PointStateKey> encode_state_sequence(const PointLog& point) {
  auto bad = [&](const ContactRecord& c, const std::string& why) {
    fail(ErrorKind::UnencodableContact, point.match_id + " set " + std::to_string(point.set_number) + " point " +
                                            std::to_string(point.point_index) + " row " +
                                            std::to_string(c.source_row) + ": " + why);
  };
  std::vector<PointStateKey> states;
  states.reserve(point.contacts.size() + 1);
  PointStateKey cur;
  for (std::size_t i = 0; i < point.contacts.size(); ++i) {
    const ContactRecord& c = point.contacts[i];
    if (i == 0) {
      if (c.skill != SkillType::Serve) bad(c, "rally must open with a serve");
      cur = PointStateKey{Side::S, false, false, {touch_of(c)}};
      states.push_back(cur);
      continue;
    }
    if (c.skill == SkillType::Serve) bad(c, "serve in the middle of a rally");
    if (c.skill == SkillType::Reception && i != 1) bad(c, "reception that does not follow the serve");
    if (c.skill == SkillType::Attack && !valid_attack_code(c.attack_code.value_or("")))
      bad(c, "attack code must be non-empty alphanumeric");
    const ContactRecord& prev = point.contacts[i - 1];
    const bool new_possession = c.team != prev.team || c.possession_index != prev.possession_index;
    if (new_possession) {
      cur = PointStateKey{side_of(point, c.team), false, false, {touch_of(c)}};
    } else {
      if (cur.touches.back().skill == SkillType::Attack || cur.touches.back().skill == SkillType::Serve)
        bad(c, "contact by the same side after an attack or serve");
      cur.touches.push_back(touch_of(c));
    }
    states.push_back(cur);
  }
  states.push_back(PointStateKey::won_by(side_of(point, point.winner)));
  return states;
}

/// " → "-joined printed form of a state sequence.
inline std::string format_sequence(const std::vector<PointStateKey>& states) {
  std::string out;
  for (std::size_t i = 0; i < states.size(); ++i) {
    if (i) out += " \xE2\x86\x92 ";
    out += states[i].str();
  }
  return out;
}

}  // namespace vbpg::markov
