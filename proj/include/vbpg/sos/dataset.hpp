#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vbpg/core/error.hpp"
#include "vbpg/core/types.hpp"
#include "vbpg/markov/absorb.hpp"
#include "vbpg/markov/baseline.hpp"
#include "vbpg/markov/encode.hpp"
#include "vbpg/sos/outcome.hpp"
#include "vbpg/sos/responsibility.hpp"

namespace vbpg::sos {

/// Location of a contact in the corpus.
struct ContactRef {
  MatchId match_id;
  int set_number = 0;
  int point_index = 0;
  std::size_t contact = 0;

  friend auto operator<=>(const ContactRef&, const ContactRef&) = default;
  std::string str() const {
    return match_id + "/" + std::to_string(set_number) + "/" + std::to_string(point_index) + "/" +
           std::to_string(contact);
  }
};

inline ContactRef ref_of(const PointLog& p, std::size_t contact) {
  return {p.match_id, p.set_number, p.point_index, contact};
}

struct ServeObservation {
  ContactRef ref;
  PlayerId server, receiver;
  TeamId srv_team, rcv_team;
  ConferenceId srv_conf, rcv_conf;
  markov::PointStateKey pre, post;
  double y = 0.0;
};

struct ServeDataset {
  std::vector<ServeObservation> obs;
  std::size_t service_errors = 0;
  std::size_t no_reception = 0;  // aces charted without a reception contact
};

/// One row per non-error serve with a charted reception. y is the negated
/// change in sideout probability, so positive values favour the server.
inline void add_point_serves(ServeDataset& d, const PointLog& p, const std::vector<markov::PointStateKey>& states,
                             const markov::PwpTable& pwp) {
  if (p.contacts.empty()) return;
  const ContactRecord& s = p.contacts.front();
  if (s.eval == EvalCode::Error) {
    ++d.service_errors;
    return;
  }
  if (p.contacts.size() < 2 || p.contacts[1].skill != SkillType::Reception) {
    ++d.no_reception;
    return;
  }
  const ContactRecord& r = p.contacts[1];
  ServeObservation o;
  o.ref = ref_of(p, 0);
  o.server = s.player;
  o.receiver = r.player;
  o.srv_team = p.serving_team;
  o.rcv_team = p.receiving_team;
  o.srv_conf = p.serving_conference;
  o.rcv_conf = p.receiving_conference;
  o.pre = states[0];
  o.post = states[1];
  o.y = -(pwp.v_of(o.post) - pwp.v_of(o.pre));
  d.obs.push_back(std::move(o));
}

inline ServeDataset build_serve_dataset(const std::vector<PointLog>& points, const markov::PwpTable& pwp) {
  ServeDataset d;
  for (const auto& p : points) add_point_serves(d, p, markov::encode_state_sequence(p), pwp);
  return d;
}

struct AttackObservation {
  ContactRef ref;
  markov::Side side = markov::Side::S;
  PlayerId attacker, setter;
  bool setter_observed = false;
  std::optional<std::size_t> set_contact;
  TeamId team, def_team;
  ConferenceId conf, def_conf;
  std::string attack_code;
  Assignment blocker;
  std::optional<Assignment> digger;  // clean attacks and block-throughs only
  std::optional<std::size_t> block_contact, dig_contact;
  markov::PointStateKey pre, post;
  AttackCategory category = AttackCategory::Clean;
  markov::SplitLabels x;
  markov::SplitResponses y;
  double w_post = 0.0;

  /// Component k (1..7) is reached when its response exists.
  bool reaches(int k) const { return y.y[static_cast<std::size_t>(k - 1)].has_value(); }
  double response(int k) const { return y.y[static_cast<std::size_t>(k - 1)].value_or(0.0); }
};

struct AttackDataset {
  std::vector<AttackObservation> obs;
  std::array<std::size_t, 5> category_counts{};
  std::size_t gaps = 0;
  std::vector<std::string> unlabelable;
  markov::BaselineTable baselines;
};

/// Labeled attacks of one point with identities filled in but no split
/// responses yet (those need baselines over the whole corpus).
inline void add_point_attacks(std::vector<AttackObservation>& out, AttackDataset& stats, const PointLog& p,
                              const std::vector<markov::PointStateKey>& states, const markov::PwpTable& pwp,
                              const ResponsibilityTable& table) {
  const PointOutcomes po = label_attack_outcomes(p);
  stats.gaps += po.gaps;
  for (const auto& u : po.unlabelable) stats.unlabelable.push_back(ref_of(p, u.contact).str() + ": " + u.reason);
  const PointAlignments al = alignments_of(p);
  for (const auto& l : po.attacks) {
    const ContactRecord& a = p.contacts[l.contact];
    AttackObservation o;
    o.ref = ref_of(p, l.contact);
    o.side = markov::side_of(p, a.team);
    o.attacker = a.player;
    if (auto s = setter_of(p, l.contact)) {
      o.setter = s->first;
      o.setter_observed = s->second;
      if (s->second) o.set_contact = l.contact - 1;
    } else {
      o.setter = "?" + a.team;
    }
    o.team = a.team;
    o.def_team = p.opponent_of(a.team);
    o.conf = p.conference_of(a.team);
    o.def_conf = p.conference_of(o.def_team);
    o.attack_code = a.attack_code.value_or("");
    o.block_contact = l.block;
    o.dig_contact = l.dig;
    o.blocker = assign_blocker(p, l, table, al);
    if (l.category == AttackCategory::Clean || l.category == AttackCategory::BlockThrough)
      o.digger = assign_digger(p, l, table, al);
    o.pre = states[l.contact];
    o.post = states[l.post];
    o.category = l.category;
    o.x = markov::SplitLabels::of(l.category);
    o.w_post = pwp.win_prob(o.post, o.side);
    ++stats.category_counts[static_cast<std::size_t>(l.category)];
    out.push_back(std::move(o));
  }
}

/// Baselines are built from every labeled attack, then each attack gets
/// its split responses against them.
inline void finish_attack_dataset(AttackDataset& d, std::uint64_t support = markov::kDefaultSupport) {
  std::vector<markov::AttackContext> ctx;
  ctx.reserve(d.obs.size());
  for (const auto& o : d.obs) ctx.push_back({o.pre, o.category, o.w_post});
  d.baselines = markov::BaselineTable::build(ctx, support);
  for (std::size_t i = 0; i < d.obs.size(); ++i) d.obs[i].y = markov::compute_split_responses(ctx[i], d.baselines);
}

inline AttackDataset build_attack_dataset(const std::vector<PointLog>& points, const markov::PwpTable& pwp,
                                          const ResponsibilityTable& table,
                                          std::uint64_t support = markov::kDefaultSupport) {
  AttackDataset d;
  for (const auto& p : points) add_point_attacks(d.obs, d, p, markov::encode_state_sequence(p), pwp, table);
  finish_attack_dataset(d, support);
  return d;
}

}  // namespace vbpg::sos
