#pragma once

#include <array>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "vbpg/core/error.hpp"
#include "vbpg/io/csv.hpp"
#include "vbpg/mixed/reml.hpp"
#include "vbpg/sos/models.hpp"

namespace vbpg::attribution {

using sos::PgRole;

inline SkillType skill_of(PgRole r) {
  switch (r) {
    case PgRole::Server: return SkillType::Serve;
    case PgRole::Receiver: return SkillType::Reception;
    case PgRole::Attacker: return SkillType::Attack;
    case PgRole::Setter: return SkillType::Set;
    case PgRole::Blocker: return SkillType::Block;
    case PgRole::Digger: return SkillType::Dig;
  }
  return SkillType::Serve;
}

/// One credited share of one component on one contact. `ref` is the
/// player's own contact when she touched the ball, else the attack she was
/// responsible for; `event` is always the serve or attack.
/// adjusted_pg = raw_pg + intercept_term + sos.
struct PointsGainedEntry {
  sos::ContactRef ref, event;
  PlayerId player;
  TeamId team;
  ConferenceId conference;
  PgRole role = PgRole::Server;
  int component = 0;  // 0 = serve/receive model, 1..7 attack models
  bool observed = true;
  double share = 1.0;
  double raw_pg = 0.0;
  double intercept_term = 0.0;
  double sos = 0.0;
  double adjusted_pg = 0.0;
};

inline std::string component_label(int k) { return k == 0 ? "SV" : std::to_string(k); }

inline std::array<PointsGainedEntry, 2> pg_serve_receive(const sos::ServeObservation& o, const mixed::MixedFit& fit) {
  const double alpha = fit.intercept;
  const double rcv = sos::opponent_blup_sum(o, fit, PgRole::Server);
  const double srv = sos::opponent_blup_sum(o, fit, PgRole::Receiver);
  PointsGainedEntry s;
  s.ref = s.event = o.ref;
  s.player = o.server;
  s.team = o.srv_team;
  s.conference = o.srv_conf;
  s.role = PgRole::Server;
  s.raw_pg = o.y;
  s.intercept_term = -alpha;
  s.sos = -rcv;
  s.adjusted_pg = o.y - (alpha + rcv);

  PointsGainedEntry r = s;
  r.ref.contact = o.ref.contact + 1;
  r.player = o.receiver;
  r.team = o.rcv_team;
  r.conference = o.rcv_conf;
  r.role = PgRole::Receiver;
  r.raw_pg = -o.y;
  r.intercept_term = alpha;
  r.sos = srv;
  r.adjusted_pg = -(o.y - (alpha + srv));
  return {s, r};
}

/// Attacker share theta/(theta+psi) and blocker share beta/(beta+delta) per
/// attack model; the blocker share is 1 where no digger is modelled.
struct AttackRatios {
  std::array<std::optional<double>, sos::kAttackModels> offense, defense;
  std::array<bool, sos::kAttackModels> degenerate{};

  static AttackRatios from(const sos::AttackFits& fits) {
    AttackRatios r;
    for (int k = 1; k <= sos::kAttackModels; ++k) {
      if (!fits.has(k)) continue;
      const auto i = static_cast<std::size_t>(k - 1);
      bool deg = false;
      r.offense[i] = mixed::variance_ratio(fits.model(k), "attacker", "setter", &deg);
      r.degenerate[i] = deg;
      if (k >= 6) {
        r.defense[i] = mixed::variance_ratio(fits.model(k), "blocker", "digger", &deg);
        r.degenerate[i] = r.degenerate[i] || deg;
      } else if (k >= 2) {
        r.defense[i] = 1.0;
      }
    }
    return r;
  }
};

/// Per-component credit for one attack, indexed [k-1][role] with roles
/// attacker, setter, blocker, digger. Unreached components stay zero.
struct AttackAttribution {
  std::array<bool, sos::kAttackModels> reached{};
  std::array<std::array<double, 4>, sos::kAttackModels> raw{}, adjusted{}, share{};
  std::vector<PointsGainedEntry> entries;

  /// Role totals summed over the components that role takes part in.
  std::array<double, 4> total(bool adjusted_values) const {
    const auto& m = adjusted_values ? adjusted : raw;
    std::array<double, 4> t{};
    for (int k = 1; k <= sos::kAttackModels; ++k)
      for (std::size_t r = 0; r < 4; ++r)
        if ((r < 2) || (r == 2 && k >= 2) || (r == 3 && k >= 6)) t[r] += m[static_cast<std::size_t>(k - 1)][r];
    return t;
  }
};

inline AttackAttribution pg_attack(const sos::AttackObservation& o, const sos::AttackFits& fits,
                                   const AttackRatios& ratios) {
  AttackAttribution out;
  for (int k = 1; k <= sos::kAttackModels; ++k) {
    if (!o.reaches(k)) continue;
    const auto i = static_cast<std::size_t>(k - 1);
    if (!ratios.offense[i] || (k >= 2 && !ratios.defense[i]))
      fail(ErrorKind::MissingRatio, "no variance ratio for attack model " + std::to_string(k));
    const mixed::MixedFit& fit = fits.model(k);
    out.reached[i] = true;
    const double y = o.response(k);
    const double alpha = fit.intercept;
    const double r_off = *ratios.offense[i];
    const double r_def = k >= 2 ? *ratios.defense[i] : 0.0;

    auto emit = [&](std::size_t slot, PgRole role, const PlayerId& player, const TeamId& team,
                    const ConferenceId& conf, double share, bool observed, std::optional<std::size_t> own) {
      PointsGainedEntry e;
      e.event = o.ref;
      e.ref = o.ref;
      if (observed && own) e.ref.contact = *own;
      e.player = player;
      e.team = team;
      e.conference = conf;
      e.role = role;
      e.component = k;
      e.observed = observed;
      e.share = share;
      if (sos::is_offense(role)) {
        e.raw_pg = share * y;
        if (k == 1) {
          e.adjusted_pg = e.raw_pg;
        } else {
          const double d = sos::opponent_blup_sum(o, fit, role, k);
          e.intercept_term = -share * alpha;
          e.sos = -share * d;
          e.adjusted_pg = share * (y - (alpha + d));
        }
      } else {
        const double a = sos::opponent_blup_sum(o, fit, role, k);
        e.raw_pg = -share * y;
        e.intercept_term = share * alpha;
        e.sos = share * a;
        e.adjusted_pg = -share * (y - (alpha + a));
      }
      out.raw[i][slot] = e.raw_pg;
      out.adjusted[i][slot] = e.adjusted_pg;
      out.share[i][slot] = share;
      out.entries.push_back(std::move(e));
    };

    emit(0, PgRole::Attacker, o.attacker, o.team, o.conf, r_off, true, o.ref.contact);
    emit(1, PgRole::Setter, o.setter, o.team, o.conf, 1.0 - r_off, o.setter_observed, o.set_contact);
    if (k >= 2)
      emit(2, PgRole::Blocker, o.blocker.player, o.def_team, o.def_conf, r_def,
           o.blocker.provenance == sos::Provenance::Observed, o.block_contact);
    if (k >= 6) {
      if (!o.digger) fail(ErrorKind::MissingRatio, "attack " + o.ref.str() + " reaches a digger model without a digger");
      emit(3, PgRole::Digger, o.digger->player, o.def_team, o.def_conf, 1.0 - r_def,
           o.digger->provenance == sos::Provenance::Observed, o.dig_contact);
    }
  }
  return out;
}

/// Every entry for a corpus, serves first then attacks, in input order.
inline std::vector<PointsGainedEntry> attribute_all(const std::vector<sos::ServeObservation>& serves,
                                                    const mixed::MixedFit& serve_fit,
                                                    const std::vector<sos::AttackObservation>& attacks,
                                                    const sos::AttackFits& fits) {
  std::vector<PointsGainedEntry> out;
  out.reserve(serves.size() * 2 + attacks.size() * 8);
  for (const auto& s : serves)
    for (auto& e : pg_serve_receive(s, serve_fit)) out.push_back(std::move(e));
  const AttackRatios ratios = AttackRatios::from(fits);
  for (const auto& a : attacks)
    for (auto& e : pg_attack(a, fits, ratios).entries) out.push_back(std::move(e));
  return out;
}

inline void write_ledger(std::ostream& os, const std::vector<PointsGainedEntry>& entries) {
  io::CsvWriter w(os);
  w.row({"contact", "event", "player", "team", "conference", "role", "skill", "component", "observed", "share",
         "raw_pg", "intercept_term", "sos", "adjusted_pg"});
  for (const auto& e : entries)
    w.row({e.ref.str(), e.event.str(), e.player, e.team, e.conference, std::string(sos::role_label(e.role)),
           std::string(skill_name(skill_of(e.role))), component_label(e.component), e.observed ? "1" : "0",
           io::exact(e.share), io::exact(e.raw_pg), io::exact(e.intercept_term), io::exact(e.sos),
           io::exact(e.adjusted_pg)});
}

}  // namespace vbpg::attribution
