#pragma once

#include <cctype>
#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vbpg/core/error.hpp"
#include "vbpg/core/types.hpp"

namespace vbpg::markov {

/// Which team has the ball: the team that served this rally or the one
/// that received. Terminal states use the side of the rally winner.
enum class Side : std::uint8_t { S, R };

inline constexpr char side_letter(Side s) { return s == Side::S ? 'S' : 'R'; }
inline constexpr Side other(Side s) { return s == Side::S ? Side::R : Side::S; }

/// One element of a possession. Serves and attacks carry no evaluation;
/// attacks carry their code instead ("*" = any code).
struct Touch {
  SkillType skill = SkillType::Serve;
  std::optional<EvalCode> eval;
  std::string code;

  friend bool operator==(const Touch&, const Touch&) = default;
  friend auto operator<=>(const Touch&, const Touch&) = default;
};

inline constexpr std::string_view kGenericAttackCode = "*";

inline bool valid_attack_code(std::string_view code) {
  if (code.empty()) return false;
  for (char c : code)
    if (!std::isalnum(static_cast<unsigned char>(c))) return false;
  return true;
}

/// State of a rally: possession side plus the touches of the current
/// possession. `truncated` marks a backed-off key that keeps only the last
/// touch; such keys never collide with observed states.
struct PointStateKey {
  Side side = Side::S;
  bool terminal = false;
  bool truncated = false;
  std::vector<Touch> touches;

  static PointStateKey won_by(Side s) { return PointStateKey{s, true, false, {}}; }

  bool ends_in_attack() const { return !touches.empty() && touches.back().skill == SkillType::Attack; }

  std::string body() const {
    if (terminal) return "W";
    std::string out;
    if (truncated) out.push_back('~');
    for (const auto& t : touches) {
      out += skill_state_letter(t.skill);
      if (t.skill == SkillType::Attack)
        out += t.code;
      else if (t.eval)
        out.push_back(eval_symbol(*t.eval));
    }
    return out;
  }

  /// Printed form, e.g. "(R, R#S#AX6)" or "(S, W)".
  std::string str() const { return std::string("(") + side_letter(side) + ", " + body() + ")"; }

  friend bool operator==(const PointStateKey&, const PointStateKey&) = default;
  friend auto operator<=>(const PointStateKey&, const PointStateKey&) = default;
};

inline Touch touch_of(const ContactRecord& c) {
  Touch t;
  t.skill = c.skill;
  if (c.skill == SkillType::Attack) {
    t.code = c.attack_code.value_or("");
  } else if (c.skill != SkillType::Serve) {
    t.eval = c.eval;
  }
  return t;
}

/// Back-off ladder: level 1 replaces the attack code with the generic code,
/// level 2 additionally keeps only the final touch. Returns nullopt when the
/// requested level would not change the key.
inline std::optional<PointStateKey> coarsen(const PointStateKey& key, int level) {
  if (key.terminal || level <= 0) return std::nullopt;
  PointStateKey k = key;
  bool changed = false;
  if (k.ends_in_attack() && k.touches.back().code != kGenericAttackCode) {
    k.touches.back().code = std::string(kGenericAttackCode);
    changed = true;
  }
  if (level >= 2 && k.touches.size() > 1) {
    k.touches.erase(k.touches.begin(), k.touches.end() - 1);
    k.truncated = true;
    changed = true;
  }
  if (!changed) return std::nullopt;
  return k;
}

/// Inverse of PointStateKey::str().
inline PointStateKey parse_state_key(std::string_view text) {
  auto bad = [&] { fail(ErrorKind::BadField, "unparseable state key '" + std::string(text) + "'"); };
  if (text.size() < 6 || text.front() != '(' || text.back() != ')' || text.substr(2, 2) != ", ") bad();
  PointStateKey k;
  if (text[1] == 'S') k.side = Side::S;
  else if (text[1] == 'R') k.side = Side::R;
  else bad();
  std::string_view body = text.substr(4, text.size() - 5);
  if (body == "W") {
    k.terminal = true;
    return k;
  }
  std::size_t i = 0;
  if (i < body.size() && body[i] == '~') {
    k.truncated = true;
    ++i;
  }
  while (i < body.size()) {
    Touch t;
    if (body.substr(i, 2) == "SV") {
      t.skill = SkillType::Serve;
      i += 2;
    } else {
      switch (body[i]) {
        case 'R': t.skill = SkillType::Reception; break;
        case 'S': t.skill = SkillType::Set; break;
        case 'A': t.skill = SkillType::Attack; break;
        case 'D': t.skill = SkillType::Dig; break;
        case 'B': t.skill = SkillType::Block; break;
        default: bad();
      }
      ++i;
      if (t.skill == SkillType::Attack) {
        t.code = std::string(body.substr(i));
        i = body.size();
      } else {
        if (i >= body.size()) bad();
        auto e = eval_from_symbol(body[i]);
        if (!e) bad();
        t.eval = e;
        ++i;
      }
    }
    k.touches.push_back(std::move(t));
  }
  if (k.touches.empty()) bad();
  return k;
}

}  // namespace vbpg::markov
