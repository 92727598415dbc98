#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "vbpg/core/error.hpp"
#include "vbpg/core/types.hpp"
#include "vbpg/ingest/alignment.hpp"
#include "vbpg/ingest/parse.hpp"
#include "vbpg/ingest/schema.hpp"

namespace vbpg::synth {

/// Standard deviations of the true effects, on the logit scale.
struct EffectSds {
  double conference = 0.15;
  double team = 0.15;
  double server = 0.8;
  double receiver = 0.8;
  double attacker = 0.585;  // attacker:setter variance 9:1
  double setter = 0.195;
  double blocker = 0.39;
  double digger = 0.39;
};

struct SyntheticConfig {
  int conferences = 4;
  int teams_per_conference = 8;
  int players_per_team = 10;
  int matches = 600;
  int points_per_set = 25;
  int deciding_set_points = 15;
  int sets_to_win = 3;
  double in_conference_share = 0.7;
  double ds_team_share = 0.5;  // teams that send a DS in for one OH in the back row
  double ds_gap = 0.0;         // added to every DS's receive effect
  double bench_start_rate = 0.15;     // sets started by the third OH
  double second_setter_rate = 0.5;    // sets started by the second setter
  bool exact_variances = true;        // rescale drawn effects to the configured sds
  EffectSds sd;
  std::uint64_t seed = 1;

  int teams() const { return conferences * teams_per_conference; }

  void validate() const {
    auto bad = [](const std::string& why) { fail(ErrorKind::InvalidConfig, why); };
    if (conferences < 2) bad("need at least 2 conferences");
    if (teams_per_conference < 2) bad("need at least 2 teams per conference");
    if (players_per_team < 8) bad("need at least 8 players per team (six starters, libero, DS)");
    if (matches < 1) bad("need at least one match");
    if (points_per_set < 2 || deciding_set_points < 2) bad("sets must be played to at least 2 points");
    if (sets_to_win < 1) bad("sets_to_win must be positive");
    for (double s : {in_conference_share, ds_team_share, bench_start_rate, second_setter_rate})
      if (!(s >= 0.0 && s <= 1.0)) bad("shares must lie in [0, 1]");
    for (double s : {sd.conference, sd.team, sd.server, sd.receiver, sd.attacker, sd.setter, sd.blocker, sd.digger})
      if (!(s >= 0.0) || !std::isfinite(s)) bad("effect standard deviations must be finite and non-negative");
    if (!std::isfinite(ds_gap)) bad("ds_gap must be finite");
  }

  nlohmann::json to_json() const {
    return {{"conferences", conferences},
            {"teams_per_conference", teams_per_conference},
            {"players_per_team", players_per_team},
            {"matches", matches},
            {"points_per_set", points_per_set},
            {"deciding_set_points", deciding_set_points},
            {"sets_to_win", sets_to_win},
            {"in_conference_share", in_conference_share},
            {"ds_team_share", ds_team_share},
            {"ds_gap", ds_gap},
            {"bench_start_rate", bench_start_rate},
            {"second_setter_rate", second_setter_rate},
            {"exact_variances", exact_variances},
            {"sd",
             {{"conference", sd.conference},
              {"team", sd.team},
              {"server", sd.server},
              {"receiver", sd.receiver},
              {"attacker", sd.attacker},
              {"setter", sd.setter},
              {"blocker", sd.blocker},
              {"digger", sd.digger}}},
            {"seed", seed}};
  }

  static SyntheticConfig from_json(const nlohmann::json& j) {
    SyntheticConfig c;
    try {
      c.conferences = j.value("conferences", c.conferences);
      c.teams_per_conference = j.value("teams_per_conference", c.teams_per_conference);
      c.players_per_team = j.value("players_per_team", c.players_per_team);
      c.matches = j.value("matches", c.matches);
      c.points_per_set = j.value("points_per_set", c.points_per_set);
      c.deciding_set_points = j.value("deciding_set_points", c.deciding_set_points);
      c.sets_to_win = j.value("sets_to_win", c.sets_to_win);
      c.in_conference_share = j.value("in_conference_share", c.in_conference_share);
      c.ds_team_share = j.value("ds_team_share", c.ds_team_share);
      c.ds_gap = j.value("ds_gap", c.ds_gap);
      c.bench_start_rate = j.value("bench_start_rate", c.bench_start_rate);
      c.second_setter_rate = j.value("second_setter_rate", c.second_setter_rate);
      c.exact_variances = j.value("exact_variances", c.exact_variances);
      c.seed = j.value("seed", c.seed);
      if (j.contains("sd")) {
        const auto& s = j.at("sd");
        c.sd.conference = s.value("conference", c.sd.conference);
        c.sd.team = s.value("team", c.sd.team);
        c.sd.server = s.value("server", c.sd.server);
        c.sd.receiver = s.value("receiver", c.sd.receiver);
        c.sd.attacker = s.value("attacker", c.sd.attacker);
        c.sd.setter = s.value("setter", c.sd.setter);
        c.sd.blocker = s.value("blocker", c.sd.blocker);
        c.sd.digger = s.value("digger", c.sd.digger);
      }
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::InvalidConfig, std::string("bad config: ") + e.what());
    }
    c.validate();
    return c;
  }
};

/// Roster slots in order; extra players beyond these never play.
enum class RosterRole : std::uint8_t { S1, OH1, MB1, OPP, OH2, MB2, L, DS, S2, OH3, Bench };
inline constexpr std::array<std::string_view, 11> kRosterNames{"S1", "OH1", "MB1", "OPP", "OH2", "MB2",
                                                               "L",  "DS",  "S2",  "OH3", "X"};

struct PlayerTruth {
  PlayerId id;
  TeamId team;
  RosterRole role = RosterRole::Bench;
  double serve = 0.0, receive = 0.0, attack = 0.0, set = 0.0, block = 0.0, dig = 0.0;
};

struct TeamTruth {
  TeamId id;
  ConferenceId conference;
  double effect = 0.0;
  bool uses_ds = false;
  std::vector<PlayerId> roster;  // indexed by RosterRole order
};

/// Baseline logits of the rally model; player effects tilt these.
struct BaseRates {
  double serve_error = -2.3;
  // reception '#', '+', '!', '-', '/', '=' weights and quality slopes
  std::array<double, 6> reception_logit{0.0, 0.0, -0.5, -0.2, -1.3, -1.1};
  std::array<double, 6> reception_slope{1.0, 0.5, 0.0, -0.5, -1.0, -1.5};
  double attack_error = -1.0;
  double clean = 0.9;
  double block_error = -2.0;
  double through = 0.0;
  double kill = -0.2;
  double stuff = -1.0;
  // dig '#', '+', '!', '-', '='
  std::array<double, 5> dig_logit{-1.0, -0.3, 0.0, 0.2, -0.4};
  std::array<double, 5> dig_slope{1.0, 0.5, 0.0, -0.5, -1.0};
  std::array<double, 3> attack_code_weight{0.45, 0.25, 0.30};  // X5, X1, X6
};

inline constexpr std::array<std::string_view, 3> kAttackCodes{"X5", "X1", "X6"};

struct GroundTruthParams {
  SyntheticConfig config;
  BaseRates base;
  std::map<ConferenceId, double> conferences;
  std::vector<TeamTruth> teams;
  std::map<PlayerId, PlayerTruth> players;

  const TeamTruth& team(const TeamId& t) const {
    for (const auto& x : teams)
      if (x.id == t) return x;
    fail(ErrorKind::UnknownEntity, "team " + t);
  }
  const PlayerTruth& player(const PlayerId& p) const {
    auto it = players.find(p);
    if (it == players.end()) fail(ErrorKind::UnknownEntity, "player " + p);
    return it->second;
  }
  /// Team plus conference effect.
  double side_effect(const TeamId& t) const {
    const TeamTruth& x = team(t);
    return x.effect + conferences.at(x.conference);
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["config"] = config.to_json();
    for (const auto& [c, e] : conferences) j["conferences"][c] = e;
    for (const auto& t : teams)
      j["teams"][t.id] = {{"conference", t.conference}, {"effect", t.effect}, {"uses_ds", t.uses_ds}};
    for (const auto& [id, p] : players)
      j["players"][id] = {{"team", p.team},       {"role", kRosterNames[static_cast<std::size_t>(p.role)]},
                          {"serve", p.serve},     {"receive", p.receive},
                          {"attack", p.attack},   {"set", p.set},
                          {"block", p.block},     {"dig", p.dig}};
    return j;
  }
};

namespace detail {

/// Independent stream per (seed, purpose, index).
inline std::mt19937_64 stream(std::uint64_t seed, std::uint64_t purpose, std::uint64_t index) {
  std::seed_seq s{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                  static_cast<std::uint32_t>(purpose), static_cast<std::uint32_t>(index),
                  static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(s);
}

inline double u01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

template <std::size_t N>
std::size_t categorical(std::mt19937_64& rng, const std::array<double, N>& w) {
  double total = 0.0;
  for (double x : w) total += x;
  double u = u01(rng) * total;
  for (std::size_t i = 0; i < N; ++i) {
    if (u < w[i]) return i;
    u -= w[i];
  }
  return N - 1;
}

/// Softmax of base + slope * eta.
template <std::size_t N>
std::array<double, N> tilted(const std::array<double, N>& base, const std::array<double, N>& slope, double eta) {
  std::array<double, N> w;
  double mx = -1e300;
  for (std::size_t i = 0; i < N; ++i) mx = std::max(mx, base[i] + slope[i] * eta);
  double s = 0.0;
  for (std::size_t i = 0; i < N; ++i) s += (w[i] = std::exp(base[i] + slope[i] * eta - mx));
  for (auto& x : w) x /= s;
  return w;
}

}  // namespace detail

inline constexpr std::array<EvalCode, 6> kReceptionEvals{EvalCode::Perfect, EvalCode::Positive, EvalCode::Ok,
                                                         EvalCode::Negative, EvalCode::Poor, EvalCode::Error};
inline constexpr std::array<EvalCode, 5> kDigEvals{EvalCode::Perfect, EvalCode::Positive, EvalCode::Ok,
                                                   EvalCode::Negative, EvalCode::Error};

/// Reception outcome probabilities for receive-minus-serve strength eta.
inline std::array<double, 6> reception_probs(const BaseRates& b, double eta) {
  return detail::tilted(b.reception_logit, b.reception_slope, eta);
}

inline std::array<double, 5> dig_probs(const BaseRates& b, double eta) {
  return detail::tilted(b.dig_logit, b.dig_slope, eta);
}

/// Rescales each drawn effect to mean 0 and the configured standard deviation
/// over the players it applies to: setters for set, hitters for attack,
/// everyone for the rest. The DS gap is applied after.
inline void standardize_effects(GroundTruthParams& g) {
  const auto& sd = g.config.sd;
  auto is_setter = [](RosterRole r) { return r == RosterRole::S1 || r == RosterRole::S2; };
  auto is_hitter = [](RosterRole r) {
    return r == RosterRole::OH1 || r == RosterRole::OH2 || r == RosterRole::OH3 || r == RosterRole::MB1 ||
           r == RosterRole::MB2 || r == RosterRole::OPP;
  };
  auto all = [](RosterRole) { return true; };
  auto fix = [&](double PlayerTruth::*field, double target, auto in_group) {
    double n = 0.0, sum = 0.0, ss = 0.0;
    for (const auto& [id, p] : g.players)
      if (in_group(p.role)) {
        n += 1.0;
        sum += p.*field;
      }
    if (n < 2.0) return;
    const double mean = sum / n;
    for (const auto& [id, p] : g.players)
      if (in_group(p.role)) ss += (p.*field - mean) * (p.*field - mean);
    const double cur = std::sqrt(ss / (n - 1.0));
    for (auto& [id, p] : g.players)
      if (in_group(p.role)) p.*field = cur > 0.0 ? (p.*field - mean) * target / cur : 0.0;
  };
  for (auto& [id, p] : g.players)
    if (p.role == RosterRole::DS) p.receive -= g.config.ds_gap;
  fix(&PlayerTruth::set, sd.setter, is_setter);
  fix(&PlayerTruth::attack, sd.attacker, is_hitter);
  fix(&PlayerTruth::serve, sd.server, all);
  fix(&PlayerTruth::receive, sd.receiver, all);
  fix(&PlayerTruth::block, sd.blocker, all);
  fix(&PlayerTruth::dig, sd.digger, all);
  for (auto& [id, p] : g.players)
    if (p.role == RosterRole::DS) p.receive += g.config.ds_gap;
}

inline GroundTruthParams draw_truth(const SyntheticConfig& cfg) {
  cfg.validate();
  GroundTruthParams g;
  g.config = cfg;
  auto rng = detail::stream(cfg.seed, 1, 0);
  std::normal_distribution<double> z(0.0, 1.0);
  auto pad = [](int i) { return (i < 10 ? "0" : "") + std::to_string(i); };
  for (int c = 1; c <= cfg.conferences; ++c) g.conferences["Conf" + std::to_string(c)] = cfg.sd.conference * z(rng);
  for (int c = 1; c <= cfg.conferences; ++c)
    for (int t = 1; t <= cfg.teams_per_conference; ++t) {
      TeamTruth team;
      team.id = "T" + pad((c - 1) * cfg.teams_per_conference + t);
      team.conference = "Conf" + std::to_string(c);
      team.effect = cfg.sd.team * z(rng);
      team.uses_ds = detail::u01(rng) < cfg.ds_team_share;
      for (int i = 0; i < cfg.players_per_team; ++i) {
        PlayerTruth p;
        p.role = i < 10 ? static_cast<RosterRole>(i) : RosterRole::Bench;
        p.id = team.id + "-" + std::string(kRosterNames[static_cast<std::size_t>(p.role)]) +
               (p.role == RosterRole::Bench ? std::to_string(i) : "");
        p.team = team.id;
        p.serve = cfg.sd.server * z(rng);
        p.receive = cfg.sd.receiver * z(rng);
        p.attack = cfg.sd.attacker * z(rng);
        p.set = cfg.sd.setter * z(rng);
        p.block = cfg.sd.blocker * z(rng);
        p.dig = cfg.sd.digger * z(rng);
        if (p.role == RosterRole::DS) p.receive += cfg.ds_gap;
        team.roster.push_back(p.id);
        g.players.emplace(p.id, p);
      }
      g.teams.push_back(std::move(team));
    }
  if (cfg.exact_variances) standardize_effects(g);
  return g;
}

struct MatchResult {
  MatchId match_id;
  TeamId home, away, winner;
  int home_points = 0, away_points = 0;
  int home_sets = 0, away_sets = 0;
};

struct SyntheticSeason {
  GroundTruthParams truth;
  std::vector<ingest::PointHeader> headers;
  std::vector<ContactRecord> records;
  std::vector<LineupState> lineups;
  std::vector<MatchResult> results;
};

namespace detail {

struct Court {
  const TeamTruth* team = nullptr;
  std::array<PlayerId, 6> core;  // rotation slots 1..6 without the DS swap
  int setter_slot = 1;
  PlayerId ds, libero;

  TeamLineup lineup() const {
    TeamLineup l;
    l.team = team->id;
    l.slots = core;
    l.setter_slot = setter_slot;
    if (!ds.empty())
      for (int slot : {1, 5, 6})
        if (role_of_slot(slot, setter_slot) == Role::OH && core[static_cast<std::size_t>(slot - 1)] == team->roster[4])
          l.slots[static_cast<std::size_t>(slot - 1)] = ds;
    return l;
  }
  void rotate() {
    std::rotate(core.begin(), core.begin() + 1, core.end());
    setter_slot = setter_slot == 1 ? 6 : setter_slot - 1;
  }
};

class PointSim {
 public:
  PointSim(const GroundTruthParams& g, std::mt19937_64& rng) : g_(g), rng_(rng) {}

  /// Plays one rally; returns the winning team.
  TeamId play(const Court& serving, const Court& receiving, const MatchId& m, int set, int point,
              std::vector<ContactRecord>& out) {
    out_ = &out;
    m_ = m;
    set_ = set;
    point_ = point;
    side_[0] = Side{&serving, serving.lineup(), {}};
    side_[1] = Side{&receiving, receiving.lineup(), {}};
    for (auto& s : side_) s.align = ingest::resolve_defensive_positions(s.lineup, s.court->libero);
    poss_ = 1;

    const PlayerId server = side_[0].lineup.at(1);
    if (u01(rng_) < sigmoid(g_.base.serve_error)) {
      push(0, server, SkillType::Serve, EvalCode::Error);
      return id(1);
    }
    const PlayerId receiver = pick_receiver(side_[1]);
    const double eta = g_.player(receiver).receive + g_.side_effect(id(1)) - g_.player(server).serve -
                       g_.side_effect(id(0));
    const std::size_t c = categorical(rng_, reception_probs(g_.base, eta));
    const EvalCode rec = kReceptionEvals[c];
    const EvalCode srv = rec == EvalCode::Error                                    ? EvalCode::Perfect
                         : (rec == EvalCode::Poor || rec == EvalCode::Negative) ? EvalCode::Positive
                                                                                  : EvalCode::Negative;
    push(0, server, SkillType::Serve, srv);
    ++poss_;
    push(1, receiver, SkillType::Reception, rec);
    if (rec == EvalCode::Error) return id(0);
    return rally(1, quality(rec), receiver);
  }

 private:
  struct Side {
    const Court* court = nullptr;
    TeamLineup lineup;
    ingest::DefensiveAlignment align;
  };

  const TeamId& id(int s) const { return side_[s].court->team->id; }

  void push(int s, const PlayerId& p, SkillType skill, EvalCode e, std::string code = "", int zone = 0) {
    ContactRecord c;
    c.match_id = m_;
    c.set_number = set_;
    c.point_index = point_;
    c.possession_index = poss_;
    c.player = p;
    c.team = id(s);
    c.conference = side_[s].court->team->conference;
    c.skill = skill;
    c.eval = e;
    if (!code.empty()) c.attack_code = std::move(code);
    if (zone) c.end_zone = CourtZone(zone);
    out_->push_back(std::move(c));
  }

  static double quality(EvalCode e) {
    switch (e) {
      case EvalCode::Perfect: return 1.0;
      case EvalCode::Positive: return 0.6;
      case EvalCode::Ok: return 0.3;
      case EvalCode::Negative: return 0.0;
      default: return -0.5;
    }
  }

  PlayerId pick_receiver(const Side& s) {
    std::vector<std::pair<PlayerId, double>> cand;
    if (!s.court->libero.empty()) cand.emplace_back(s.court->libero, 3.0);
    for (int slot = 1; slot <= 6; ++slot) {
      if (role_of_slot(slot, s.lineup.setter_slot) != Role::OH) continue;
      cand.emplace_back(s.lineup.at(slot), slot_is_front(slot) ? 1.0 : 2.0);
    }
    double total = 0.0;
    for (const auto& c : cand) total += c.second;
    double u = u01(rng_) * total;
    for (const auto& c : cand) {
      if (u < c.second) return c.first;
      u -= c.second;
    }
    return cand.back().first;
  }

  PlayerId setter_of(const Side& s) const { return s.lineup.at(s.lineup.setter_slot); }

  PlayerId attacker_for(const Side& s, std::size_t code) const {
    for (int slot = 1; slot <= 6; ++slot) {
      const Role r = role_of_slot(slot, s.lineup.setter_slot);
      const bool front = slot_is_front(slot);
      if (code == 0 && r == Role::OH && front) return s.lineup.at(slot);
      if (code == 1 && r == Role::MB && front) return s.lineup.at(slot);
      if (code == 2 && r == Role::OPP) return s.lineup.at(slot);
    }
    return s.lineup.at(2);
  }

  Position blocker_position(std::size_t code) {
    const double u = u01(rng_);
    switch (code) {
      case 0: return u < 0.65 ? Position::FR : Position::FM;
      case 1: return u < 0.8 ? Position::FM : (u < 0.9 ? Position::FL : Position::FR);
      default: return u < 0.65 ? Position::FL : Position::FM;
    }
  }

  int zone_for(std::size_t code) {
    static constexpr std::array<std::array<double, 9>, 3> w{{
        {0.30, 0.00, 0.00, 0.00, 0.20, 0.30, 0.10, 0.00, 0.10},  // X5: zones 1..9
        {0.20, 0.00, 0.10, 0.00, 0.20, 0.30, 0.00, 0.20, 0.00},  // X1
        {0.20, 0.00, 0.00, 0.00, 0.35, 0.30, 0.15, 0.00, 0.00},  // X6
    }};
    return static_cast<int>(categorical(rng_, w[code])) + 1;
  }

  Position digger_position(int zone) {
    Position p;
    switch (zone) {
      case 1: case 9: p = Position::BR; break;
      case 6: case 8: p = Position::BM; break;
      case 5: case 7: p = Position::BL; break;
      case 2: p = Position::FR; break;
      case 3: p = Position::FM; break;
      default: p = Position::FL; break;
    }
    if (u01(rng_) < 0.15) {
      static constexpr std::array<Position, 3> back{Position::BL, Position::BM, Position::BR};
      p = back[static_cast<std::size_t>(rng_() % 3)];
    }
    return p;
  }

  /// Side `s` holds the ball after a first contact of the given quality by
  /// `first`; plays set and attack and follows the ball until the rally ends.
  TeamId rally(int s, double q, PlayerId first) {
    for (int guard = 0; guard < 40; ++guard) {
      const Side& off = side_[s];
      const int d = 1 - s;
      const Side& def = side_[d];
      PlayerId setter = setter_of(off);
      if (setter == first) setter = off.court->libero.empty() ? off.lineup.at(1) : off.court->libero;
      const std::array<double, 4> sw{std::exp(1.0 + 2.0 * q), std::exp(0.8), std::exp(0.2 - q), std::exp(-4.5)};
      static constexpr std::array<EvalCode, 4> set_evals{EvalCode::Perfect, EvalCode::Positive, EvalCode::Negative,
                                                         EvalCode::Error};
      const EvalCode se = set_evals[categorical(rng_, sw)];
      push(s, setter, SkillType::Set, se);
      if (se == EvalCode::Error) return id(d);
      const double set_bonus = se == EvalCode::Perfect ? 0.25 : (se == EvalCode::Negative ? -0.35 : 0.0);

      const std::size_t code = categorical(rng_, g_.base.attack_code_weight);
      PlayerId attacker = attacker_for(off, code);
      if (attacker == setter) attacker = attacker_for(off, 0);
      const int zone = zone_for(code);
      const PlayerId blocker = def.align.at(blocker_position(code));
      const PlayerId digger = def.align.at(digger_position(zone));
      const double o = g_.player(attacker).attack + g_.player(setter).set + g_.side_effect(id(s)) + set_bonus;
      const double blk = g_.player(blocker).block + g_.side_effect(id(d));
      const double dg = g_.player(digger).dig + g_.side_effect(id(d));
      const std::string c(kAttackCodes[code]);
      const auto& b = g_.base;

      if (u01(rng_) < sigmoid(b.attack_error - o)) {
        push(s, attacker, SkillType::Attack, EvalCode::Error, c, zone);
        return id(d);
      }
      if (u01(rng_) < sigmoid(b.clean + o - blk)) {
        if (u01(rng_) < sigmoid(b.kill + o - dg)) {
          push(s, attacker, SkillType::Attack, EvalCode::Perfect, c, zone);
          return id(s);
        }
        push(s, attacker, SkillType::Attack, EvalCode::Positive, c, zone);
        ++poss_;
        const EvalCode de = kDigEvals[categorical(rng_, dig_probs(b, dg - o))];
        push(d, digger, SkillType::Dig, de);
        if (de == EvalCode::Error) return id(s);
        s = d;
        q = quality(de);
        first = digger;
        continue;
      }
      push(s, attacker, SkillType::Attack, EvalCode::Negative, c, zone);
      ++poss_;
      if (u01(rng_) < sigmoid(b.block_error + 0.5 * o - 0.5 * blk)) {
        push(d, blocker, SkillType::Block, EvalCode::Error);
        return id(s);
      }
      if (u01(rng_) < sigmoid(b.through + o - blk)) {
        push(d, blocker, SkillType::Block, EvalCode::Negative);
        const EvalCode de = kDigEvals[categorical(rng_, dig_probs(b, dg - o))];
        const PlayerId cover = digger == blocker ? def.align.at(Position::BM) : digger;
        push(d, cover, SkillType::Dig, de);
        if (de == EvalCode::Error) return id(s);
        s = d;
        q = quality(de);
        first = cover;
        continue;
      }
      if (u01(rng_) < sigmoid(b.stuff + blk - o)) {
        push(d, blocker, SkillType::Block, EvalCode::Perfect);
        return id(d);
      }
      push(d, blocker, SkillType::Block, EvalCode::Positive);
      ++poss_;
      const PlayerId cover = off.align.at(Position::BM) == attacker ? off.align.at(Position::BL)
                                                                    : off.align.at(Position::BM);
      const EvalCode de = kDigEvals[categorical(rng_, dig_probs(b, 0.0))];
      push(s, cover, SkillType::Dig, de);
      if (de == EvalCode::Error) return id(d);
      q = quality(de);
      first = cover;
    }
    // Rally cap: the side in possession puts the ball away.
    const Side& off = side_[s];
    push(s, setter_of(off), SkillType::Set, EvalCode::Perfect);
    push(s, attacker_for(off, 0), SkillType::Attack, EvalCode::Perfect, std::string(kAttackCodes[0]), 6);
    return id(s);
  }

  const GroundTruthParams& g_;
  std::mt19937_64& rng_;
  std::vector<ContactRecord>* out_ = nullptr;
  MatchId m_;
  int set_ = 0, point_ = 0, poss_ = 1;
  std::array<Side, 2> side_;
};

struct MatchOutput {
  std::vector<ingest::PointHeader> headers;
  std::vector<ContactRecord> records;
  std::vector<LineupState> lineups;
  MatchResult result;
};

inline MatchOutput play_match(const GroundTruthParams& g, int index, const TeamId& home, const TeamId& away) {
  const SyntheticConfig& cfg = g.config;
  auto rng = stream(cfg.seed, 2, static_cast<std::uint64_t>(index));
  MatchOutput out;
  char buf[16];
  std::snprintf(buf, sizeof buf, "M%04d", index + 1);
  const MatchId m = buf;
  out.result.match_id = m;
  out.result.home = home;
  out.result.away = away;
  std::array<const TeamTruth*, 2> teams{&g.team(home), &g.team(away)};
  std::array<int, 2> sets{0, 0};
  PointSim sim(g, rng);
  int set = 0;
  while (sets[0] < cfg.sets_to_win && sets[1] < cfg.sets_to_win) {
    ++set;
    std::array<Court, 2> court;
    for (int t = 0; t < 2; ++t) {
      const TeamTruth& tm = *teams[static_cast<std::size_t>(t)];
      Court& c = court[static_cast<std::size_t>(t)];
      c.team = &tm;
      std::array<PlayerId, 6> order{tm.roster[0], tm.roster[1], tm.roster[2], tm.roster[3], tm.roster[4], tm.roster[5]};
      if (tm.roster.size() > 8 && u01(rng) < cfg.second_setter_rate) order[0] = tm.roster[8];
      if (tm.roster.size() > 9 && u01(rng) < cfg.bench_start_rate) order[1] = tm.roster[9];
      c.setter_slot = static_cast<int>(rng() % 6) + 1;
      for (int i = 0; i < 6; ++i) c.core[static_cast<std::size_t>((c.setter_slot - 1 + i) % 6)] = order[static_cast<std::size_t>(i)];
      c.libero = tm.roster[6];
      if (tm.uses_ds) c.ds = tm.roster[7];
    }
    const bool deciding = sets[0] == cfg.sets_to_win - 1 && sets[1] == cfg.sets_to_win - 1;
    const int target = deciding ? cfg.deciding_set_points : cfg.points_per_set;
    int serving = (set % 2 == 1) ? 0 : 1;
    std::array<int, 2> score{0, 0};
    int point = 0;
    while (!((score[0] >= target || score[1] >= target) && std::abs(score[0] - score[1]) >= 2)) {
      ++point;
      const int receiving = 1 - serving;
      ingest::PointHeader h;
      h.match_id = m;
      h.set_number = set;
      h.point_index = point;
      h.serving_team = teams[static_cast<std::size_t>(serving)]->id;
      h.receiving_team = teams[static_cast<std::size_t>(receiving)]->id;
      LineupState ls;
      ls.match_id = m;
      ls.set_number = set;
      ls.point_index = point;
      ls.teams = {court[static_cast<std::size_t>(serving)].lineup(), court[static_cast<std::size_t>(receiving)].lineup()};
      h.winner = sim.play(court[static_cast<std::size_t>(serving)], court[static_cast<std::size_t>(receiving)], m, set,
                          point, out.records);
      const int w = h.winner == teams[0]->id ? 0 : 1;
      ++score[static_cast<std::size_t>(w)];
      out.result.home_points += w == 0;
      out.result.away_points += w == 1;
      if (w != serving) {
        court[static_cast<std::size_t>(w)].rotate();
        serving = w;
      }
      out.headers.push_back(std::move(h));
      out.lineups.push_back(std::move(ls));
    }
    ++sets[score[0] > score[1] ? 0 : 1];
  }
  out.result.home_sets = sets[0];
  out.result.away_sets = sets[1];
  out.result.winner = sets[0] > sets[1] ? home : away;
  return out;
}

/// Fixture list: each match is in-conference with the configured share.
inline std::vector<std::pair<TeamId, TeamId>> schedule(const GroundTruthParams& g) {
  const SyntheticConfig& cfg = g.config;
  auto rng = stream(cfg.seed, 3, 0);
  std::vector<std::pair<TeamId, TeamId>> out;
  const auto n = static_cast<std::uint64_t>(g.teams.size());
  const auto per = static_cast<std::uint64_t>(cfg.teams_per_conference);
  for (int i = 0; i < cfg.matches; ++i) {
    const std::uint64_t a = rng() % n;
    std::uint64_t b;
    if (u01(rng) < cfg.in_conference_share) {
      const std::uint64_t base = a / per * per;
      do b = base + rng() % per; while (b == a);
    } else {
      do b = rng() % n; while (b / per == a / per);
    }
    out.emplace_back(g.teams[a].id, g.teams[b].id);
  }
  return out;
}

}  // namespace detail

/// Simulates a season. Matches are independent streams keyed by (seed,
/// match index), so the output does not depend on `threads`.
inline SyntheticSeason generate_season(const SyntheticConfig& cfg, unsigned threads = 1) {
  SyntheticSeason s;
  s.truth = draw_truth(cfg);
  const auto fixtures = detail::schedule(s.truth);
  std::vector<detail::MatchOutput> matches(fixtures.size());
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(fixtures.size())));
  auto work = [&](unsigned w) {
    for (std::size_t i = w; i < fixtures.size(); i += threads)
      matches[i] = detail::play_match(s.truth, static_cast<int>(i), fixtures[i].first, fixtures[i].second);
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < threads; ++w) pool.emplace_back(work, w);
    for (auto& t : pool) t.join();
  }
  for (auto& m : matches) {
    std::move(m.headers.begin(), m.headers.end(), std::back_inserter(s.headers));
    std::move(m.records.begin(), m.records.end(), std::back_inserter(s.records));
    std::move(m.lineups.begin(), m.lineups.end(), std::back_inserter(s.lineups));
    s.results.push_back(std::move(m.result));
  }
  return s;
}

/// contacts.csv, lineups.csv, schema.json and truth.json in ingest format.
inline void write_season(const SyntheticSeason& s, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const ingest::Schema schema;
  {
    std::ofstream f(dir / "contacts.csv", std::ios::binary);
    ingest::write_contacts(f, s.headers, s.records, schema);
  }
  {
    std::ofstream f(dir / "lineups.csv", std::ios::binary);
    ingest::write_lineups(f, s.lineups, schema);
  }
  {
    std::ofstream f(dir / "schema.json", std::ios::binary);
    f << schema.to_json().dump(2) << '\n';
  }
  {
    std::ofstream f(dir / "truth.json", std::ios::binary);
    nlohmann::json j = s.truth.to_json();
    for (const auto& r : s.results)
      j["matches"].push_back({{"match", r.match_id},
                              {"home", r.home},
                              {"away", r.away},
                              {"winner", r.winner},
                              {"home_points", r.home_points},
                              {"away_points", r.away_points},
                              {"home_sets", r.home_sets},
                              {"away_sets", r.away_sets}});
    f << j.dump(1) << '\n';
  }
}

}  // namespace vbpg::synth
