#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "vbpg/core/types.hpp"
#include "vbpg/markov/encode.hpp"
#include "vbpg/markov/sparse.hpp"
#include "vbpg/markov/state.hpp"

namespace vbpg::markov {

inline constexpr std::uint64_t kDefaultSupport = 20;

/// Raw transition counts keyed by printed state. Shards merge by addition.
class TransitionCounts {
 public:
  void add_sequence(const std::vector<PointStateKey>& seq) {
    for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
      auto from = seq[i].str();
      auto to = seq[i + 1].str();
      keys_.try_emplace(from, seq[i]);
      keys_.try_emplace(to, seq[i + 1]);
      ++counts_[{std::move(from), std::move(to)}];
    }
  }

  void add_point(const PointLog& p) { add_sequence(encode_state_sequence(p)); }

  void merge(const TransitionCounts& other) {
    for (const auto& [k, c] : other.counts_) counts_[k] += c;
    for (const auto& [n, k] : other.keys_) keys_.try_emplace(n, k);
  }

  const std::map<std::pair<std::string, std::string>, std::uint64_t>& counts() const { return counts_; }
  const std::map<std::string, PointStateKey>& keys() const { return keys_; }
  bool empty() const { return counts_.empty(); }

 private:
  std::map<std::pair<std::string, std::string>, std::uint64_t> counts_;
  std::map<std::string, PointStateKey> keys_;
};

/// Empirical one-step chain over observed states plus their back-off keys.
/// Rows with fewer than `support` observed transitions borrow the pooled row
/// of their coarsened key (generic attack code, then last touch only).
struct TransitionModel {
  std::vector<PointStateKey> states;
  std::vector<std::string> names;
  std::unordered_map<std::string, std::uint32_t> index;
  std::vector<std::uint8_t> observed;
  std::vector<std::uint64_t> visits;
  std::vector<std::uint32_t> representative;
  std::vector<int> backoff_level;
  std::vector<std::uint64_t> row_support;
  std::vector<std::tuple<std::uint32_t, std::uint32_t, std::uint64_t>> counts;
  CsrMatrix p1;
  std::uint64_t support = kDefaultSupport;
  std::uint32_t receiving_won = 0;
  std::uint32_t serving_won = 0;

  std::size_t size() const { return states.size(); }
  bool is_terminal(std::uint32_t i) const { return states[i].terminal; }

  std::optional<std::uint32_t> find(const std::string& name) const {
    auto it = index.find(name);
    if (it == index.end()) return std::nullopt;
    return it->second;
  }

  std::uint64_t count(std::uint32_t from, std::uint32_t to) const {
    auto it = std::lower_bound(counts.begin(), counts.end(), std::make_tuple(from, to, std::uint64_t{0}));
    if (it != counts.end() && std::get<0>(*it) == from && std::get<1>(*it) == to) return std::get<2>(*it);
    return 0;
  }
};

inline TransitionModel build_transition_model(const TransitionCounts& tc, std::uint64_t support = kDefaultSupport) {
  TransitionModel m;
  m.support = support;

  std::map<std::string, PointStateKey> all = tc.keys();
  std::set<std::string> observed_names;
  for (const auto& [n, k] : all) observed_names.insert(n);
  for (Side s : {Side::S, Side::R}) {
    auto t = PointStateKey::won_by(s);
    all.try_emplace(t.str(), t);
  }
  for (const auto& [n, k] : tc.keys())
    for (int level : {1, 2})
      if (auto c = coarsen(k, level)) all.try_emplace(c->str(), *c);

  for (auto& [n, k] : all) {
    m.index.emplace(n, static_cast<std::uint32_t>(m.states.size()));
    m.names.push_back(n);
    m.states.push_back(k);
    m.observed.push_back(observed_names.contains(n) ? 1 : 0);
  }
  const std::size_t n = m.states.size();
  m.receiving_won = m.index.at(PointStateKey::won_by(Side::R).str());
  m.serving_won = m.index.at(PointStateKey::won_by(Side::S).str());

  std::vector<std::map<std::uint32_t, std::uint64_t>> own(n), pooled(n);
  m.visits.assign(n, 0);
  for (const auto& [ft, c] : tc.counts()) {
    const std::uint32_t from = m.index.at(ft.first);
    const std::uint32_t to = m.index.at(ft.second);
    own[from][to] += c;
    m.visits[from] += c;
    m.counts.emplace_back(from, to, c);
  }
  std::sort(m.counts.begin(), m.counts.end());

  std::vector<std::uint64_t> pooled_total(n, 0);
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!m.observed[i] || m.states[i].terminal) continue;
    for (int level : {1, 2}) {
      auto c = coarsen(m.states[i], level);
      if (!c) continue;
      const std::uint32_t ci = m.index.at(c->str());
      for (const auto& [to, cnt] : own[i]) pooled[ci][to] += cnt;
      pooled_total[ci] += m.visits[i];
    }
  }

  m.representative.resize(n);
  m.backoff_level.assign(n, 0);
  m.row_support.assign(n, 0);
  for (std::uint32_t i = 0; i < n; ++i) {
    m.representative[i] = i;
    if (m.states[i].terminal) continue;
    if (!m.observed[i]) {
      m.row_support[i] = pooled_total[i];
      m.backoff_level[i] = m.states[i].truncated ? 2 : 1;
      continue;
    }
    m.row_support[i] = m.visits[i];
    if (m.visits[i] >= support) continue;
    for (int level : {1, 2}) {
      auto c = coarsen(m.states[i], level);
      if (!c) continue;
      const std::uint32_t ci = m.index.at(c->str());
      m.representative[i] = ci;
      m.backoff_level[i] = level;
      m.row_support[i] = pooled_total[ci];
      if (pooled_total[ci] >= support) break;
    }
  }

  CsrBuilder b(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    if (m.states[i].terminal) {
      b.add_row({{i, 1.0}});
      continue;
    }
    const std::uint32_t r = m.representative[i];
    const auto& row = (r == i && m.observed[i]) ? own[i] : pooled[r];
    std::uint64_t total = 0;
    for (const auto& [to, c] : row) total += c;
    std::vector<std::pair<std::uint32_t, double>> entries;
    entries.reserve(row.size());
    for (const auto& [to, c] : row)
      entries.emplace_back(to, static_cast<double>(c) / static_cast<double>(total));
    b.add_row(std::move(entries));
  }
  m.p1 = std::move(b).finish();
  return m;
}

/// Counts consecutive state pairs over validated points and normalizes.
inline TransitionModel count_transitions(const std::vector<PointLog>& points, std::uint64_t support = kDefaultSupport) {
  TransitionCounts tc;
  for (const auto& p : points) tc.add_point(p);
  return build_transition_model(tc, support);
}

}  // namespace vbpg::markov
