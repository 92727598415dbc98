#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>

#include "vbpg/core/error.hpp"
#include "vbpg/markov/state.hpp"
#include "vbpg/markov/transition_model.hpp"

namespace vbpg::markov {

/// Leaf categories of the attack outcome tree.
enum class AttackCategory : std::uint8_t { AttackError, Clean, BlockError, BlockThrough, BlockReturn };

inline constexpr std::string_view category_name(AttackCategory c) {
  switch (c) {
    case AttackCategory::AttackError: return "attack_error";
    case AttackCategory::Clean: return "clean";
    case AttackCategory::BlockError: return "block_error";
    case AttackCategory::BlockThrough: return "block_through";
    case AttackCategory::BlockReturn: return "block_return";
  }
  return "?";
}

/// Split indicators x1..x4; unset when the split is not reached.
struct SplitLabels {
  std::array<std::optional<bool>, 4> x;

  static SplitLabels of(AttackCategory c) {
    SplitLabels s;
    s.x[0] = c == AttackCategory::AttackError;
    if (c == AttackCategory::AttackError) return s;
    s.x[1] = c == AttackCategory::Clean;
    if (c == AttackCategory::Clean) return s;
    s.x[2] = c == AttackCategory::BlockError;
    if (c == AttackCategory::BlockError) return s;
    s.x[3] = c == AttackCategory::BlockThrough;
    return s;
  }
};

/// Nodes of the outcome tree over which conditional means are taken.
enum class TreeNode : std::uint8_t {
  All,
  AttackError,
  NoAttackError,
  Clean,
  BlockTouch,
  BlockError,
  NoBlockError,
  Through,
  Return,
};
inline constexpr std::size_t kTreeNodes = 9;

inline constexpr std::string_view node_name(TreeNode n) {
  constexpr std::array<std::string_view, kTreeNodes> names{
      "all", "attack_error", "no_attack_error", "clean", "block_touch", "block_error", "no_block_error", "through",
      "return"};
  return names[static_cast<std::size_t>(n)];
}

inline bool node_contains(TreeNode n, AttackCategory c) {
  using C = AttackCategory;
  switch (n) {
    case TreeNode::All: return true;
    case TreeNode::AttackError: return c == C::AttackError;
    case TreeNode::NoAttackError: return c != C::AttackError;
    case TreeNode::Clean: return c == C::Clean;
    case TreeNode::BlockTouch: return c == C::BlockError || c == C::BlockThrough || c == C::BlockReturn;
    case TreeNode::BlockError: return c == C::BlockError;
    case TreeNode::NoBlockError: return c == C::BlockThrough || c == C::BlockReturn;
    case TreeNode::Through: return c == C::BlockThrough;
    case TreeNode::Return: return c == C::BlockReturn;
  }
  return false;
}

/// One labeled attack: state after the attack contact, outcome category and
/// the attacking side's win probability at the post-outcome state.
struct AttackContext {
  PointStateKey pre;
  AttackCategory category = AttackCategory::Clean;
  double w_post = 0.0;
};

/// Pre-state key used at back-off level 0, 1 or 2.
inline PointStateKey baseline_key(const PointStateKey& pre, int level) {
  PointStateKey k = pre;
  for (int l = 1; l <= level; ++l)
    if (auto c = coarsen(pre, l)) k = *c;
  return k;
}

/// Empirical E[w(S') | S, node] with back-off from exact pre-state to the
/// generic attack code and then to the last touch only.
class BaselineTable {
 public:
  struct Cell {
    double sum = 0.0;
    std::uint64_t n = 0;
    double mean() const { return sum / static_cast<double>(n); }
  };
  struct Lookup {
    double mean = 0.0;
    std::uint64_t count = 0;
    int level = 0;
  };

  static BaselineTable build(std::span<const AttackContext> attacks, std::uint64_t support = kDefaultSupport) {
    BaselineTable t;
    t.support_ = support;
    for (const auto& a : attacks)
      for (int level = 0; level < 3; ++level) {
        auto& cells = t.cells_[level][baseline_key(a.pre, level).str()];
        for (std::size_t n = 0; n < kTreeNodes; ++n)
          if (node_contains(static_cast<TreeNode>(n), a.category)) {
            cells[n].sum += a.w_post;
            ++cells[n].n;
          }
      }
    return t;
  }

  std::uint64_t support() const { return support_; }

  std::optional<Lookup> at_level(const PointStateKey& pre, TreeNode node, int level) const {
    const auto& m = cells_[level];
    auto it = m.find(baseline_key(pre, level).str());
    if (it == m.end()) return std::nullopt;
    const Cell& c = it->second[static_cast<std::size_t>(node)];
    if (c.n == 0) return std::nullopt;
    return Lookup{c.mean(), c.n, level};
  }

  /// Finest level whose cell reaches the support threshold, else the
  /// coarsest non-empty one.
  Lookup lookup(const PointStateKey& pre, TreeNode node) const {
    std::optional<Lookup> last;
    for (int level = 0; level < 3; ++level) {
      auto l = at_level(pre, node, level);
      if (!l) continue;
      if (l->count >= support_) return *l;
      last = l;
    }
    if (!last)
      fail(ErrorKind::NoSupport, "no attacks observed for " + pre.str() + " at node " + std::string(node_name(node)));
    return *last;
  }

  const std::map<std::string, std::array<Cell, kTreeNodes>>& cells(int level) const { return cells_[level]; }

 private:
  std::array<std::map<std::string, std::array<Cell, kTreeNodes>>, 3> cells_;
  std::uint64_t support_ = kDefaultSupport;
};

/// Map from observed pre-state to the baseline under one tree condition.
inline std::map<std::string, double> conditional_w_baseline(std::span<const AttackContext> attacks, TreeNode condition,
                                                            std::uint64_t support = kDefaultSupport) {
  const BaselineTable t = BaselineTable::build(attacks, support);
  std::map<std::string, double> out;
  for (const auto& a : attacks) {
    const std::string k = a.pre.str();
    if (out.contains(k)) continue;
    try {
      out.emplace(k, t.lookup(a.pre, condition).mean);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NoSupport) throw;
    }
  }
  return out;
}

/// Split responses y1..y7; unset where the attack does not reach the split.
struct SplitResponses {
  std::array<std::optional<double>, 7> y;
  /// Back-off level used per response (0 = exact pre-state).
  std::array<int, 7> level{};
};

namespace detail {
inline void indicator(const BaselineTable& t, const PointStateKey& pre, TreeNode parent, TreeNode child,
                      SplitResponses& out, std::size_t k) {
  const auto c = t.lookup(pre, child);
  const auto p = t.at_level(pre, parent, c.level);
  out.y[k] = c.mean - p->mean;
  out.level[k] = c.level;
}
inline void leaf(const BaselineTable& t, const AttackContext& a, TreeNode node, SplitResponses& out, std::size_t k) {
  const auto c = t.lookup(a.pre, node);
  out.y[k] = a.w_post - c.mean;
  out.level[k] = c.level;
}
}  // namespace detail

/// Indicator splits compare the mean of the observed child with the mean of
/// its parent, both taken at the back-off level chosen for the child.
inline SplitResponses compute_split_responses(const AttackContext& a, const BaselineTable& t) {
  using C = AttackCategory;
  using N = TreeNode;
  SplitResponses r;
  const C c = a.category;
  detail::indicator(t, a.pre, N::All, c == C::AttackError ? N::AttackError : N::NoAttackError, r, 0);
  if (c == C::AttackError) return r;
  detail::indicator(t, a.pre, N::NoAttackError, c == C::Clean ? N::Clean : N::BlockTouch, r, 1);
  if (c == C::Clean) {
    detail::leaf(t, a, N::Clean, r, 6);
    return r;
  }
  detail::indicator(t, a.pre, N::BlockTouch, c == C::BlockError ? N::BlockError : N::NoBlockError, r, 2);
  if (c == C::BlockError) return r;
  detail::indicator(t, a.pre, N::NoBlockError, c == C::BlockThrough ? N::Through : N::Return, r, 3);
  if (c == C::BlockReturn)
    detail::leaf(t, a, N::Return, r, 4);
  else
    detail::leaf(t, a, N::Through, r, 5);
  return r;
}

}  // namespace vbpg::markov
