#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <boost/math/tools/minima.hpp>

#include "vbpg/core/error.hpp"

namespace vbpg::attribution {

inline constexpr double kDefaultPythagoreanAlpha = 9.3;

/// PS^a / (PS^a + PA^a), evaluated as 1 / (1 + (PA/PS)^a).
inline double pythagorean_winpct(double points_scored, double points_allowed, double alpha) {
  if (!(alpha > 0.0)) fail(ErrorKind::InvalidConfig, "pythagorean exponent must be positive");
  if (points_scored < 0.0 || points_allowed < 0.0) fail(ErrorKind::BadField, "negative point totals");
  if (points_scored + points_allowed <= 0.0) fail(ErrorKind::DegenerateSeason, "no points scored or allowed");
  if (points_scored == points_allowed) return 0.5;
  if (points_scored == 0.0) return 0.0;
  return 1.0 / (1.0 + std::pow(points_allowed / points_scored, alpha));
}

struct TeamSeason {
  std::string team;
  double points_scored = 0.0;
  double points_allowed = 0.0;
  double matches_won = 0.0;
  double matches_played = 0.0;

  double win_fraction() const { return matches_played > 0.0 ? matches_won / matches_played : 0.0; }
};

struct AlphaFit {
  double alpha = 0.0;
  double objective = 0.0;  // sum of squared errors in match-win fraction
  std::uintmax_t evaluations = 0;
};

inline double alpha_objective(const std::vector<TeamSeason>& teams, double alpha) {
  double sse = 0.0;
  for (const auto& t : teams) {
    const double d = pythagorean_winpct(t.points_scored, t.points_allowed, alpha) - t.win_fraction();
    sse += d * d;
  }
  return sse;
}

/// Least-squares exponent over team seasons by Brent minimisation on
/// [lo, hi].
inline AlphaFit fit_alpha(const std::vector<TeamSeason>& teams, double lo = 0.5, double hi = 50.0) {
  if (teams.empty()) fail(ErrorKind::DegenerateSeason, "no team seasons to fit");
  for (const auto& t : teams)
    if (t.matches_played <= 0.0) fail(ErrorKind::DegenerateSeason, "team " + t.team + " played no matches");
  std::uintmax_t iters = 200;
  const auto r = boost::math::tools::brent_find_minima([&](double a) { return alpha_objective(teams, a); }, lo, hi,
                                                       std::numeric_limits<double>::digits / 2, iters);
  return {r.first, r.second, iters};
}

}  // namespace vbpg::attribution
