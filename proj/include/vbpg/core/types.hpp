#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "vbpg/core/error.hpp"

namespace vbpg {

using PlayerId = std::string;
using TeamId = std::string;
using ConferenceId = std::string;
using MatchId = std::string;

// ---------------------------------------------------------------------------
// Evaluation codes
// ---------------------------------------------------------------------------

enum class EvalCode : std::uint8_t { Perfect, Positive, Ok, Negative, Poor, Error };

inline constexpr std::array<EvalCode, 6> kAllEvalCodes{
    EvalCode::Perfect, EvalCode::Positive, EvalCode::Ok,
    EvalCode::Negative, EvalCode::Poor, EvalCode::Error};

inline constexpr char eval_symbol(EvalCode e) {
  switch (e) {
    case EvalCode::Perfect: return '#';
    case EvalCode::Positive: return '+';
    case EvalCode::Ok: return '!';
    case EvalCode::Negative: return '-';
    case EvalCode::Poor: return '/';
    case EvalCode::Error: return '=';
  }
  return '?';
}

/// Five-point quality scale. '/' and '=' share the bottom rung.
inline constexpr int eval_scale(EvalCode e) {
  switch (e) {
    case EvalCode::Perfect: return 4;
    case EvalCode::Positive: return 3;
    case EvalCode::Ok: return 2;
    case EvalCode::Negative: return 1;
    case EvalCode::Poor:
    case EvalCode::Error: return 0;
  }
  return 0;
}

inline std::optional<EvalCode> eval_from_symbol(char c) {
  switch (c) {
    case '#': return EvalCode::Perfect;
    case '+': return EvalCode::Positive;
    case '!': return EvalCode::Ok;
    case '-': return EvalCode::Negative;
    case '/': return EvalCode::Poor;
    case '=': return EvalCode::Error;
    default: return std::nullopt;
  }
}

/// Accepts the single-character codes plus the dash spellings that show up in
/// exported logs ("--", en dash, em dash, minus sign).
inline std::optional<EvalCode> parse_eval(std::string_view text) {
  if (text.size() == 1) return eval_from_symbol(text[0]);
  if (text == "--" || text == "\xE2\x80\x93" || text == "\xE2\x80\x94" ||
      text == "\xE2\x88\x92")
    return EvalCode::Negative;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Skills
// ---------------------------------------------------------------------------

enum class SkillType : std::uint8_t { Serve, Reception, Set, Attack, Dig, Block };

inline constexpr std::array<SkillType, 6> kAllSkills{
    SkillType::Serve, SkillType::Reception, SkillType::Set,
    SkillType::Attack, SkillType::Dig, SkillType::Block};

inline constexpr std::string_view skill_name(SkillType s) {
  switch (s) {
    case SkillType::Serve: return "Serve";
    case SkillType::Reception: return "Reception";
    case SkillType::Set: return "Set";
    case SkillType::Attack: return "Attack";
    case SkillType::Dig: return "Dig";
    case SkillType::Block: return "Block";
  }
  return "?";
}

/// Letter used inside Markov state keys.
inline constexpr std::string_view skill_state_letter(SkillType s) {
  switch (s) {
    case SkillType::Serve: return "SV";
    case SkillType::Reception: return "R";
    case SkillType::Set: return "S";
    case SkillType::Attack: return "A";
    case SkillType::Dig: return "D";
    case SkillType::Block: return "B";
  }
  return "?";
}

inline std::optional<SkillType> parse_skill(std::string_view text) {
  std::string lower;
  lower.reserve(text.size());
  for (char c : text) lower.push_back(static_cast<char>(c >= 'A' && c <= 'Z' ? c - 'A' + 'a' : c));
  if (lower == "serve" || lower == "s") return SkillType::Serve;
  if (lower == "reception" || lower == "receive" || lower == "r") return SkillType::Reception;
  if (lower == "set" || lower == "e") return SkillType::Set;
  if (lower == "attack" || lower == "a") return SkillType::Attack;
  if (lower == "dig" || lower == "d") return SkillType::Dig;
  if (lower == "block" || lower == "b") return SkillType::Block;
  return std::nullopt;
}

/// '!' is reserved for receptions and digs.
inline constexpr bool eval_valid_for(SkillType s, EvalCode e) {
  return e != EvalCode::Ok || s == SkillType::Reception || s == SkillType::Dig;
}

// ---------------------------------------------------------------------------
// Court zones and defensive positions
// ---------------------------------------------------------------------------

class CourtZone {
 public:
  explicit CourtZone(int zone) : zone_(zone) {
    if (zone < 1 || zone > 9) fail(ErrorKind::BadZone, "zone " + std::to_string(zone) + " outside 1..9");
  }
  int value() const noexcept { return zone_; }
  friend bool operator==(CourtZone, CourtZone) = default;
  friend auto operator<=>(CourtZone, CourtZone) = default;

 private:
  int zone_;
};

/// Depth band of a zone: 0 = front (2,3,4), 1 = mid (7,8,9), 2 = deep (1,5,6).
inline int zone_band(CourtZone z) {
  switch (z.value()) {
    case 2: case 3: case 4: return 0;
    case 7: case 8: case 9: return 1;
    default: return 2;
  }
}

enum class Position : std::uint8_t { FL, FM, FR, BL, BM, BR };

inline constexpr std::array<Position, 6> kAllPositions{
    Position::FL, Position::FM, Position::FR, Position::BL, Position::BM, Position::BR};

inline constexpr std::string_view position_name(Position p) {
  switch (p) {
    case Position::FL: return "FL";
    case Position::FM: return "FM";
    case Position::FR: return "FR";
    case Position::BL: return "BL";
    case Position::BM: return "BM";
    case Position::BR: return "BR";
  }
  return "?";
}

inline std::optional<Position> parse_position(std::string_view s) {
  for (Position p : kAllPositions)
    if (position_name(p) == s) return p;
  return std::nullopt;
}

inline constexpr bool is_front(Position p) {
  return p == Position::FL || p == Position::FM || p == Position::FR;
}

/// Lineup role implied by rotation order relative to the setter.
enum class Role : std::uint8_t { S, OH, MB, OPP };

inline constexpr std::string_view role_name(Role r) {
  switch (r) {
    case Role::S: return "S";
    case Role::OH: return "OH";
    case Role::MB: return "MB";
    case Role::OPP: return "OPP";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Records
// ---------------------------------------------------------------------------

struct ContactRecord {
  MatchId match_id;
  int set_number = 1;
  int point_index = 0;
  int possession_index = 0;
  PlayerId player;
  TeamId team;
  ConferenceId conference;
  SkillType skill = SkillType::Serve;
  EvalCode eval = EvalCode::Negative;
  std::optional<std::string> attack_code;
  std::optional<std::pair<double, double>> start_xy;
  std::optional<CourtZone> end_zone;
  std::size_t source_row = 0;

  friend bool operator==(const ContactRecord& a, const ContactRecord& b) {
    return a.match_id == b.match_id && a.set_number == b.set_number &&
           a.point_index == b.point_index && a.possession_index == b.possession_index &&
           a.player == b.player && a.team == b.team && a.conference == b.conference &&
           a.skill == b.skill && a.eval == b.eval && a.attack_code == b.attack_code &&
           a.start_xy == b.start_xy && a.end_zone == b.end_zone;
  }
};

/// One team's rotation at the start of a point. Slot i (1-based) is the
/// rotation position: 1 = server/back right, 2 = front right, 3 = front
/// middle, 4 = front left, 5 = back left, 6 = back middle.
struct TeamLineup {
  TeamId team;
  std::array<PlayerId, 6> slots;
  int setter_slot = 1;

  const PlayerId& at(int slot) const { return slots[static_cast<std::size_t>(slot - 1)]; }
  bool contains(const PlayerId& p) const {
    for (const auto& s : slots)
      if (s == p) return true;
    return false;
  }
  friend bool operator==(const TeamLineup&, const TeamLineup&) = default;
};

inline constexpr bool slot_is_front(int slot) { return slot >= 2 && slot <= 4; }

enum class Row : std::uint8_t { Front, Back };

inline Row setter_row(const TeamLineup& l) {
  return slot_is_front(l.setter_slot) ? Row::Front : Row::Back;
}

/// Role of rotation slot `slot` given the setter's slot, following the
/// service order S, OH, MB, OPP, OH, MB.
inline Role role_of_slot(int slot, int setter_slot) {
  static constexpr std::array<Role, 6> order{Role::S, Role::OH, Role::MB, Role::OPP, Role::OH, Role::MB};
  const int offset = ((slot - setter_slot) % 6 + 6) % 6;
  return order[static_cast<std::size_t>(offset)];
}

struct LineupState {
  MatchId match_id;
  int set_number = 1;
  int point_index = 0;
  std::vector<TeamLineup> teams;
  std::size_t source_row = 0;

  const TeamLineup* find(const TeamId& t) const {
    for (const auto& l : teams)
      if (l.team == t) return &l;
    return nullptr;
  }
};

struct PointLog {
  MatchId match_id;
  int set_number = 1;
  int point_index = 0;
  TeamId serving_team;
  TeamId receiving_team;
  ConferenceId serving_conference;
  ConferenceId receiving_conference;
  TeamId winner;
  std::vector<ContactRecord> contacts;
  std::vector<TeamLineup> lineups;
  /// Inferred libero per team for this set (empty string = none).
  std::vector<std::pair<TeamId, PlayerId>> liberos;
  /// Set when the final contact carries neither an error nor a winning code.
  bool unterminated = false;

  const TeamLineup* lineup_of(const TeamId& t) const {
    for (const auto& l : lineups)
      if (l.team == t) return &l;
    return nullptr;
  }
  std::optional<PlayerId> libero_of(const TeamId& t) const {
    for (const auto& [team, p] : liberos)
      if (team == t && !p.empty()) return p;
    return std::nullopt;
  }
  const TeamId& opponent_of(const TeamId& t) const {
    return t == serving_team ? receiving_team : serving_team;
  }
  const ConferenceId& conference_of(const TeamId& t) const {
    return t == serving_team ? serving_conference : receiving_conference;
  }
};

}  // namespace vbpg
