#pragma once

#include <array>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "vbpg/core/error.hpp"
#include "vbpg/io/csv.hpp"
#include "vbpg/mixed/reml.hpp"
#include "vbpg/sos/dataset.hpp"

namespace vbpg::sos {

inline constexpr int kAttackModels = 7;

inline const mixed::EffectSpec& serve_spec() {
  static const mixed::EffectSpec s{{"srv_conf", "srv_team", "server", "rcv_conf", "rcv_team", "receiver"},
                                   {{"srv_team", "srv_conf"}, {"server", "srv_team"},
                                    {"rcv_team", "rcv_conf"}, {"receiver", "rcv_team"}}};
  return s;
}

inline const std::vector<std::string>& offense_factors() {
  static const std::vector<std::string> f{"off_conf", "off_team", "attacker", "setter"};
  return f;
}

/// Factor set of attack model k: offense only for model 1, plus defensive
/// conference, team and blocker for 2..7, plus the digger for 6 and 7.
inline mixed::EffectSpec attack_spec(int k) {
  if (k < 1 || k > kAttackModels) fail(ErrorKind::UnknownModel, "attack model " + std::to_string(k));
  mixed::EffectSpec s{offense_factors(), {{"off_team", "off_conf"}, {"attacker", "off_team"}, {"setter", "off_team"}}};
  if (k >= 2) {
    for (const char* f : {"def_conf", "def_team", "blocker"}) s.factors.push_back(f);
    s.nested_in["def_team"] = "def_conf";
    s.nested_in["blocker"] = "def_team";
  }
  if (k >= 6) {
    s.factors.push_back("digger");
    s.nested_in["digger"] = "def_team";
  }
  return s;
}

inline std::map<std::string, std::string> serve_levels(const ServeObservation& o) {
  return {{"srv_conf", o.srv_conf}, {"srv_team", o.srv_team}, {"server", o.server},
          {"rcv_conf", o.rcv_conf}, {"rcv_team", o.rcv_team}, {"receiver", o.receiver}};
}

inline std::map<std::string, std::string> attack_levels(const AttackObservation& o) {
  std::map<std::string, std::string> m{{"off_conf", o.conf},     {"off_team", o.team},     {"attacker", o.attacker},
                                       {"setter", o.setter},     {"def_conf", o.def_conf}, {"def_team", o.def_team},
                                       {"blocker", o.blocker.player}};
  m["digger"] = o.digger ? o.digger->player : std::string();
  return m;
}

inline mixed::Observation to_observation(const std::map<std::string, std::string>& levels,
                                         const mixed::EffectSpec& spec, double y) {
  mixed::Observation o;
  o.y = y;
  for (const auto& f : spec.factors) o.levels.push_back(levels.at(f));
  return o;
}

inline mixed::MixedFit fit_serve_model(const std::vector<ServeObservation>& obs, const mixed::FitOptions& opt = {}) {
  mixed::SufficientStats st(serve_spec().factors.size());
  for (const auto& o : obs) st.add(to_observation(serve_levels(o), serve_spec(), o.y));
  return mixed::fit(st, serve_spec(), opt);
}

struct AttackFits {
  std::array<std::optional<mixed::MixedFit>, kAttackModels> fits;
  std::array<std::size_t, kAttackModels> rows{};

  const mixed::MixedFit& model(int k) const {
    if (k < 1 || k > kAttackModels || !fits[static_cast<std::size_t>(k - 1)])
      fail(ErrorKind::UnknownModel, "attack model " + std::to_string(k) + " not fitted");
    return *fits[static_cast<std::size_t>(k - 1)];
  }
  bool has(int k) const { return k >= 1 && k <= kAttackModels && fits[static_cast<std::size_t>(k - 1)].has_value(); }
};

/// Statistics for model k over the rows that reach split k.
inline mixed::SufficientStats attack_stats(const std::vector<AttackObservation>& obs, int k) {
  const mixed::EffectSpec spec = attack_spec(k);
  mixed::SufficientStats st(spec.factors.size());
  for (const auto& o : obs)
    if (o.reaches(k)) st.add(to_observation(attack_levels(o), spec, o.response(k)));
  return st;
}

/// Fits models 1..7 on their subsets; a subset with fewer than two rows is
/// left unfitted.
inline AttackFits fit_attack_models(const std::vector<AttackObservation>& obs, const mixed::FitOptions& opt = {}) {
  AttackFits out;
  for (int k = 1; k <= kAttackModels; ++k) {
    const mixed::SufficientStats st = attack_stats(obs, k);
    out.rows[static_cast<std::size_t>(k - 1)] = st.n();
    if (st.n() >= 2) out.fits[static_cast<std::size_t>(k - 1)] = mixed::fit(st, attack_spec(k), opt);
  }
  return out;
}

inline nlohmann::json to_json(const AttackFits& f) {
  nlohmann::json j = nlohmann::json::array();
  for (int k = 1; k <= kAttackModels; ++k) {
    nlohmann::json m{{"model", k}, {"rows", f.rows[static_cast<std::size_t>(k - 1)]}};
    m["fit"] = f.has(k) ? mixed::to_json(f.model(k)) : nlohmann::json();
    j.push_back(std::move(m));
  }
  return j;
}

inline AttackFits attack_fits_from_json(const nlohmann::json& j) {
  AttackFits f;
  for (const auto& m : j) {
    const int k = m.at("model").get<int>();
    if (k < 1 || k > kAttackModels) fail(ErrorKind::UnknownModel, "attack model " + std::to_string(k));
    f.rows[static_cast<std::size_t>(k - 1)] = m.at("rows").get<std::size_t>();
    if (!m.at("fit").is_null()) f.fits[static_cast<std::size_t>(k - 1)] = mixed::fit_from_json(m.at("fit"));
  }
  return f;
}

// ---------------------------------------------------------------------------
// Strength of schedule
// ---------------------------------------------------------------------------

enum class PgRole : std::uint8_t { Server, Receiver, Attacker, Setter, Blocker, Digger };

inline constexpr std::string_view role_label(PgRole r) {
  switch (r) {
    case PgRole::Server: return "Server";
    case PgRole::Receiver: return "Receiver";
    case PgRole::Attacker: return "Attacker";
    case PgRole::Setter: return "Setter";
    case PgRole::Blocker: return "Blocker";
    case PgRole::Digger: return "Digger";
  }
  return "?";
}

inline bool is_offense(PgRole r) { return r == PgRole::Attacker || r == PgRole::Setter; }

/// Opponent-side factors whose BLUPs make up the schedule faced by `role` in
/// attack model k.
inline std::vector<std::string> opponent_factors(PgRole role, int k) {
  if (is_offense(role)) {
    if (k == 1) return {};
    std::vector<std::string> f{"def_conf", "def_team", "blocker"};
    if (k >= 6) f.push_back("digger");
    return f;
  }
  return offense_factors();
}

/// Sum of the opposing side's BLUPs in the model's own sign convention
/// (response favours the serving or attacking side). The intercept is not
/// part of it. Unseen levels contribute 0.
inline double opponent_blup_sum(const ServeObservation& o, const mixed::MixedFit& f, PgRole role) {
  const auto lv = serve_levels(o);
  if (role == PgRole::Server) return mixed::predict_linear(f, lv, {"rcv_conf", "rcv_team", "receiver"}, false);
  if (role == PgRole::Receiver) return mixed::predict_linear(f, lv, {"srv_conf", "srv_team", "server"}, false);
  fail(ErrorKind::UnknownModel, "serve model has no role " + std::string(role_label(role)));
}

inline double opponent_blup_sum(const AttackObservation& o, const mixed::MixedFit& f, PgRole role, int k) {
  return mixed::predict_linear(f, attack_levels(o), opponent_factors(role, k), false);
}

/// Strength of schedule faced by the player in `role`: positive when the
/// opposition is tougher than average.
inline double player_sos(const ServeObservation& o, const mixed::MixedFit& f, PgRole role) {
  const double s = opponent_blup_sum(o, f, role);
  return role == PgRole::Server ? -s : s;
}

inline double player_sos(const AttackObservation& o, const AttackFits& fits, PgRole role, int k) {
  const double s = opponent_blup_sum(o, fits.model(k), role, k);
  return is_offense(role) ? -s : s;
}

/// Per-contact SoS ledger: one row per (contact, role, model).
inline void write_sos_ledger(std::ostream& os, const std::vector<ServeObservation>& serves,
                             const mixed::MixedFit& serve_fit, const std::vector<AttackObservation>& attacks,
                             const AttackFits& fits) {
  io::CsvWriter w(os);
  w.row({"contact", "player", "role", "model", "sos"});
  for (const auto& o : serves) {
    w.row({o.ref.str(), o.server, "Server", "SV", io::exact(player_sos(o, serve_fit, PgRole::Server))});
    w.row({o.ref.str(), o.receiver, "Receiver", "SV", io::exact(player_sos(o, serve_fit, PgRole::Receiver))});
  }
  for (const auto& o : attacks)
    for (int k = 1; k <= kAttackModels; ++k) {
      if (!o.reaches(k) || !fits.has(k)) continue;
      const std::string m = std::to_string(k);
      w.row({o.ref.str(), o.attacker, "Attacker", m, io::exact(player_sos(o, fits, PgRole::Attacker, k))});
      w.row({o.ref.str(), o.setter, "Setter", m, io::exact(player_sos(o, fits, PgRole::Setter, k))});
      if (k >= 2) w.row({o.ref.str(), o.blocker.player, "Blocker", m, io::exact(player_sos(o, fits, PgRole::Blocker, k))});
      if (k >= 6 && o.digger)
        w.row({o.ref.str(), o.digger->player, "Digger", m, io::exact(player_sos(o, fits, PgRole::Digger, k))});
    }
}

}  // namespace vbpg::sos
