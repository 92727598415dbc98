#pragma once

#include <map>
#include <optional>
#include <string>
#include <tuple>
#include <vector>

#include "vbpg/core/error.hpp"
#include "vbpg/core/types.hpp"
#include "vbpg/ingest/libero.hpp"
#include "vbpg/ingest/parse.hpp"

namespace vbpg::ingest {

struct AssembleResult {
  std::vector<PointLog> points;
  std::vector<Rejection> rejections;
  std::size_t unterminated = 0;
  std::size_t missing_lineups = 0;
  std::size_t rotation_mismatches = 0;
};

/// Winner implied by the last contact: an error loses the rally for the
/// contacting team; '#' on a serve, attack or block wins it. Anything else
/// leaves the rally undetermined.
inline std::optional<TeamId> terminal_winner(const ContactRecord& last, const TeamId& serving, const TeamId& receiving) {
  const TeamId& other = last.team == serving ? receiving : serving;
  if (last.eval == EvalCode::Error) return other;
  if (last.eval == EvalCode::Perfect &&
      (last.skill == SkillType::Serve || last.skill == SkillType::Attack || last.skill == SkillType::Block))
    return last.team;
  return std::nullopt;
}

namespace detail {

inline void check_rotation(const PointLog& prev, const PointLog& cur, std::size_t& mismatches) {
  if (prev.match_id != cur.match_id || prev.set_number != cur.set_number) return;
  for (const auto& now : cur.lineups) {
    const TeamLineup* before = prev.lineup_of(now.team);
    if (!before) continue;
    // A team rotates once when it wins the serve back.
    const bool sided_out = prev.winner == now.team && prev.receiving_team == now.team;
    const int expected = sided_out ? (before->setter_slot + 4) % 6 + 1 : before->setter_slot;
    if (now.setter_slot != expected) ++mismatches;
  }
}

}  // namespace detail

/// Partitions contacts into rallies, validates possession structure and the
/// recorded winner, and attaches lineups and inferred liberos.
inline AssembleResult assemble_points(const std::vector<PointHeader>& headers,
                                      const std::vector<ContactRecord>& records,
                                      const std::vector<LineupState>& lineups,
                                      const LiberoInference& liberos, bool strict = false) {
  AssembleResult out;
  auto reject = [&](std::size_t row, ErrorKind k, std::string why) {
    if (strict) fail(k, "point at row " + std::to_string(row) + ": " + why);
    out.rejections.push_back({row, k, std::move(why)});
  };

  using Key = std::tuple<MatchId, int, int>;
  std::map<Key, std::vector<const ContactRecord*>> grouped;
  std::map<TeamId, ConferenceId> conference_of;
  for (const auto& c : records) {
    grouped[{c.match_id, c.set_number, c.point_index}].push_back(&c);
    if (!c.conference.empty()) conference_of.emplace(c.team, c.conference);
  }
  std::map<Key, const LineupState*> lineup_at;
  for (const auto& l : lineups) lineup_at[{l.match_id, l.set_number, l.point_index}] = &l;

  for (const auto& h : headers) {
    Key key{h.match_id, h.set_number, h.point_index};
    auto git = grouped.find(key);
    if (git == grouped.end() || git->second.empty()) {
      reject(h.source_row, ErrorKind::BadField, "point has no contacts");
      continue;
    }
    const auto& cs = git->second;
    PointLog p;
    p.match_id = h.match_id;
    p.set_number = h.set_number;
    p.point_index = h.point_index;
    p.serving_team = h.serving_team;
    p.receiving_team = h.receiving_team;
    p.winner = h.winner;

    if (cs.front()->skill != SkillType::Serve || cs.front()->team != h.serving_team) {
      reject(h.source_row, ErrorKind::BadField, "first contact must be a serve by the serving team");
      continue;
    }
    bool ok = true;
    const bool explicit_possessions = [&] {
      for (const auto* c : cs)
        if (c->possession_index != 0) return true;
      return false;
    }();
    int poss = 0;
    TeamId poss_team;
    for (std::size_t i = 0; i < cs.size() && ok; ++i) {
      const ContactRecord& c = *cs[i];
      if (c.team != h.serving_team && c.team != h.receiving_team) {
        reject(c.source_row, ErrorKind::BadField, "contact by team '" + c.team + "' not playing this point");
        ok = false;
        break;
      }
      if (i > 0 && cs[i - 1]->eval == EvalCode::Error) {
        reject(c.source_row, ErrorKind::InconsistentWinner, "contact recorded after an error ended the rally");
        ok = false;
        break;
      }
      if (explicit_possessions) {
        if (i == 0) {
          poss = c.possession_index;
          poss_team = c.team;
        } else if (c.possession_index < poss) {
          reject(c.source_row, ErrorKind::NonAlternatingPossession, "possession index decreases");
          ok = false;
        } else if (c.possession_index == poss) {
          if (c.team != poss_team) {
            reject(c.source_row, ErrorKind::NonAlternatingPossession, "possession shared by both teams");
            ok = false;
          }
        } else {
          if (c.team == poss_team) {
            reject(c.source_row, ErrorKind::NonAlternatingPossession,
                   "consecutive possessions by " + c.team + " without the ball crossing the net");
            ok = false;
          }
          poss = c.possession_index;
          poss_team = c.team;
        }
      }
      p.contacts.push_back(c);
    }
    if (!ok) continue;
    if (!explicit_possessions) {
      int idx = 1;
      for (std::size_t i = 0; i < p.contacts.size(); ++i) {
        if (i > 0 && p.contacts[i].team != p.contacts[i - 1].team) ++idx;
        p.contacts[i].possession_index = idx;
      }
    }
    auto derived = terminal_winner(p.contacts.back(), h.serving_team, h.receiving_team);
    if (derived && *derived != h.winner) {
      reject(h.source_row, ErrorKind::InconsistentWinner,
             "final contact implies " + *derived + " won but header records " + h.winner);
      continue;
    }
    if (!derived) {
      p.unterminated = true;
      ++out.unterminated;
    }

    auto cit = conference_of.find(p.serving_team);
    p.serving_conference = cit == conference_of.end() ? std::string() : cit->second;
    cit = conference_of.find(p.receiving_team);
    p.receiving_conference = cit == conference_of.end() ? std::string() : cit->second;

    auto lit = lineup_at.find(key);
    if (lit != lineup_at.end()) {
      for (const auto& t : lit->second->teams)
        if (t.team == p.serving_team || t.team == p.receiving_team) p.lineups.push_back(t);
    }
    if (p.lineups.size() != 2) ++out.missing_lineups;
    for (const TeamId& t : {p.serving_team, p.receiving_team}) {
      auto lib = liberos.get({p.match_id, p.set_number, t});
      p.liberos.emplace_back(t, lib.value_or(""));
    }
    if (!out.points.empty()) detail::check_rotation(out.points.back(), p, out.rotation_mismatches);
    out.points.push_back(std::move(p));
  }
  return out;
}

}  // namespace vbpg::ingest
