#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "vbpg/core/error.hpp"
#include "vbpg/markov/sparse.hpp"
#include "vbpg/markov/state.hpp"
#include "vbpg/markov/transition_model.hpp"

namespace vbpg::markov {

inline constexpr unsigned kDefaultSteps = 100;
inline constexpr double kDefaultResidualTol = 1e-9;

/// Sideout probability v(s) for every state of a fitted chain.
struct PwpTable {
  std::vector<PointStateKey> states;
  std::vector<std::string> names;
  std::unordered_map<std::string, std::uint32_t> index;
  std::vector<double> v;
  std::vector<double> residual;
  std::vector<std::uint64_t> visits;
  unsigned steps = kDefaultSteps;

  std::size_t size() const { return states.size(); }

  double max_residual() const {
    double m = 0.0;
    for (double r : residual) m = std::max(m, r);
    return m;
  }

  std::optional<double> find(const std::string& name) const {
    auto it = index.find(name);
    if (it == index.end()) return std::nullopt;
    return v[it->second];
  }

  /// v(key) with the same back-off ladder as the transition model.
  double v_of(const PointStateKey& key) const {
    if (key.terminal) return key.side == Side::R ? 1.0 : 0.0;
    if (auto x = find(key.str())) return *x;
    for (int level : {1, 2})
      if (auto c = coarsen(key, level))
        if (auto x = find(c->str())) return *x;
    fail(ErrorKind::MissingState, "no sideout probability for state " + key.str());
  }

  /// Win probability of the team in possession at `key`.
  double w(const PointStateKey& key) const {
    const double x = v_of(key);
    return key.side == Side::R ? x : 1.0 - x;
  }

  /// Win probability from the point of view of `perspective`.
  double win_prob(const PointStateKey& key, Side perspective) const {
    const double x = v_of(key);
    return perspective == Side::R ? x : 1.0 - x;
  }
};

/// Reads v off (P1^n)[., (R,W)] without checking convergence.
inline PwpTable absorb_unchecked(const TransitionModel& m, unsigned n_steps = kDefaultSteps) {
  PwpTable t;
  t.states = m.states;
  t.names = m.names;
  t.index = m.index;
  t.visits = m.visits;
  t.steps = n_steps;
  t.v.assign(m.size(), 0.0);
  t.residual.assign(m.size(), 0.0);
  if (m.size() == 0) return t;
  const CsrMatrix pn = power(m.p1, n_steps);
  for (std::size_t i = 0; i < m.size(); ++i) {
    double rest = 0.0;
    for (std::size_t k = pn.row_ptr[i]; k < pn.row_ptr[i + 1]; ++k)
      if (!m.states[pn.col[k]].terminal) rest += pn.val[k];
    t.residual[i] = rest;
    t.v[i] = std::clamp(pn.at(i, m.receiving_won), 0.0, 1.0);
  }
  return t;
}

/// Throws NonConvergent listing the offending states when any row keeps more
/// than `tol` of its mass on non-terminal states after `n_steps`.
inline PwpTable absorb(const TransitionModel& m, unsigned n_steps = kDefaultSteps, double tol = kDefaultResidualTol) {
  PwpTable t = absorb_unchecked(m, n_steps);
  std::string bad;
  std::size_t nbad = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t.residual[i] <= tol) continue;
    if (nbad++ < 10) bad += (bad.empty() ? "" : "; ") + t.names[i] + " residual " + std::to_string(t.residual[i]);
  }
  if (nbad)
    fail(ErrorKind::NonConvergent,
         std::to_string(nbad) + " states above residual " + std::to_string(tol) + " at " + std::to_string(n_steps) +
             " steps: " + bad);
  return t;
}

}  // namespace vbpg::markov
