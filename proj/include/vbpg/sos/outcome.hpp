#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "vbpg/core/error.hpp"
#include "vbpg/core/types.hpp"
#include "vbpg/markov/baseline.hpp"
#include "vbpg/markov/encode.hpp"

namespace vbpg::sos {

using markov::AttackCategory;

/// An attack with its outcome read off the contacts that follow it.
/// `post` indexes the point's state sequence (one state per contact plus
/// the terminal).
struct LabeledAttack {
  std::size_t contact = 0;
  AttackCategory category = AttackCategory::Clean;
  std::size_t post = 0;
  std::optional<std::size_t> block;  // opposing block contact
  std::optional<std::size_t> dig;    // defending-side dig that fields the ball
};

struct Unlabelable {
  std::size_t contact = 0;
  std::string reason;
};

struct PointOutcomes {
  std::vector<LabeledAttack> attacks;
  std::vector<Unlabelable> unlabelable;
  std::size_t gaps = 0;  // attacks with no follow-up and no terminal code
};

/// Labels every attack in a point. The side of the first contact after an
/// opposing block decides return (attacking side) vs through (blocking side).
inline PointOutcomes label_attack_outcomes(const PointLog& p) {
  PointOutcomes out;
  const auto& cs = p.contacts;
  const std::size_t terminal = cs.size();
  for (std::size_t i = 0; i < cs.size(); ++i) {
    const ContactRecord& a = cs[i];
    if (a.skill != SkillType::Attack) continue;
    LabeledAttack l;
    l.contact = i;
    const std::size_t j = i + 1;
    auto flag = [&](std::string why) { out.unlabelable.push_back({i, std::move(why)}); };
    if (a.eval == EvalCode::Error) {
      if (j != cs.size()) {
        flag("contacts follow an attack error");
        continue;
      }
      l.category = AttackCategory::AttackError;
      l.post = terminal;
      out.attacks.push_back(l);
      continue;
    }
    if (j == cs.size()) {
      if (a.eval != EvalCode::Perfect) {
        ++out.gaps;
        continue;
      }
      l.category = AttackCategory::Clean;
      l.post = terminal;
      out.attacks.push_back(l);
      continue;
    }
    const ContactRecord& next = cs[j];
    if (next.team == a.team) {
      flag("attacking side touches the ball again before the opponent");
      continue;
    }
    if (a.eval == EvalCode::Perfect && next.skill != SkillType::Block) {
      flag("kill code followed by a defensive contact");
      continue;
    }
    if (next.skill != SkillType::Block) {
      l.category = AttackCategory::Clean;
      l.post = j;
      if (next.skill == SkillType::Dig) l.dig = j;
      out.attacks.push_back(l);
      continue;
    }
    l.block = j;
    if (next.eval == EvalCode::Error) {
      l.category = AttackCategory::BlockError;
      l.post = j;
      out.attacks.push_back(l);
      continue;
    }
    const std::size_t k = j + 1;
    if (k == cs.size()) {
      if (next.eval != EvalCode::Perfect) {
        ++out.gaps;
        continue;
      }
      l.category = AttackCategory::BlockReturn;
      l.post = terminal;
      out.attacks.push_back(l);
      continue;
    }
    if (next.eval == EvalCode::Perfect && cs[k].team == next.team) {
      flag("stuff block followed by a blocking-side contact");
      continue;
    }
    l.post = k;
    if (cs[k].team == a.team) {
      l.category = AttackCategory::BlockReturn;
    } else {
      l.category = AttackCategory::BlockThrough;
      if (cs[k].skill == SkillType::Dig) l.dig = k;
    }
    out.attacks.push_back(l);
  }
  return out;
}

/// Setter credited with an attack: the set immediately before it in the same
/// possession, else the lineup setter.
inline std::optional<std::pair<PlayerId, bool>> setter_of(const PointLog& p, std::size_t attack) {
  const ContactRecord& a = p.contacts[attack];
  if (attack > 0) {
    const ContactRecord& prev = p.contacts[attack - 1];
    if (prev.skill == SkillType::Set && prev.team == a.team && prev.possession_index == a.possession_index)
      return std::pair{prev.player, true};
  }
  if (const TeamLineup* l = p.lineup_of(a.team))
    if (l->setter_slot >= 1 && l->setter_slot <= 6 && !l->at(l->setter_slot).empty())
      return std::pair{l->at(l->setter_slot), false};
  return std::nullopt;
}

}  // namespace vbpg::sos
