#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "vbpg/attribution/pythagorean.hpp"
#include "vbpg/core/error.hpp"
#include "vbpg/markov/transition_model.hpp"
#include "vbpg/synth/generator.hpp"

namespace vbpg::synth {

struct McEstimate {
  double estimate = 0.0;
  double se = 0.0;
  std::uint64_t unabsorbed = 0;  // walks cut off at max_steps, counted as serving wins
};

/// Share of random walks on the fitted kernel that end in a receiving-side
/// win, starting from `state`.
inline McEstimate mc_point_win_prob(const markov::TransitionModel& m, std::uint32_t state, std::uint64_t n_sim,
                                    std::uint64_t seed, unsigned max_steps = 1000) {
  if (state >= m.size()) fail(ErrorKind::MissingState, "state index out of range");
  if (n_sim == 0) fail(ErrorKind::InvalidConfig, "n_sim must be positive");
  auto rng = detail::stream(seed, 4, state);
  const auto& p = m.p1;
  McEstimate r;
  std::uint64_t wins = 0;
  for (std::uint64_t i = 0; i < n_sim; ++i) {
    std::uint32_t s = state;
    unsigned steps = 0;
    while (!m.is_terminal(s) && steps < max_steps) {
      double u = detail::u01(rng);
      const std::size_t lo = p.row_ptr[s], hi = p.row_ptr[s + 1];
      std::uint32_t next = p.col[hi - 1];
      for (std::size_t k = lo; k < hi; ++k) {
        if (u < p.val[k]) {
          next = p.col[k];
          break;
        }
        u -= p.val[k];
      }
      s = next;
      ++steps;
    }
    if (!m.is_terminal(s))
      ++r.unabsorbed;
    else if (s == m.receiving_won)
      ++wins;
  }
  const double n = static_cast<double>(n_sim);
  r.estimate = static_cast<double>(wins) / n;
  r.se = std::sqrt(r.estimate * (1.0 - r.estimate) / n);
  return r;
}

struct LeagueConfig {
  int teams = 300;
  int matches_per_team = 40;
  double points_per_match = 180.0;
  double share_sd = 0.03;
  double alpha = attribution::kDefaultPythagoreanAlpha;
  std::uint64_t seed = 1;
};

/// Team seasons whose match wins are Binomial(matches, pythagorean(PS, PA)).
inline std::vector<attribution::TeamSeason> generate_pythagorean_league(const LeagueConfig& c) {
  if (c.teams < 1 || c.matches_per_team < 1 || !(c.points_per_match > 0.0) || !(c.share_sd >= 0.0) ||
      !(c.alpha > 0.0))
    fail(ErrorKind::InvalidConfig, "invalid league configuration");
  auto rng = detail::stream(c.seed, 5, 0);
  std::normal_distribution<double> share(0.5, c.share_sd);
  std::vector<attribution::TeamSeason> out;
  const double total = c.points_per_match * c.matches_per_team;
  for (int t = 0; t < c.teams; ++t) {
    attribution::TeamSeason s;
    s.team = "L" + std::to_string(t + 1);
    const double sh = std::clamp(share(rng), 0.05, 0.95);
    s.points_scored = std::round(sh * total);
    s.points_allowed = total - s.points_scored;
    const double p = attribution::pythagorean_winpct(s.points_scored, s.points_allowed, c.alpha);
    std::binomial_distribution<int> wins(c.matches_per_team, p);
    s.matches_won = wins(rng);
    s.matches_played = c.matches_per_team;
    out.push_back(std::move(s));
  }
  return out;
}

/// Expected receiver raw PG for one reception at strength eta:
/// sum over outcomes of P(c | eta) v(after c) minus v(before the serve).
/// `v_after` follows the order #, +, !, -, /, =.
inline double expected_reception_pg(const BaseRates& b, double eta, const std::array<double, 6>& v_after,
                                    double v_before) {
  const auto p = reception_probs(b, eta);
  double e = 0.0;
  for (std::size_t i = 0; i < 6; ++i) e += p[i] * v_after[i];
  return e - v_before;
}

}  // namespace vbpg::synth
