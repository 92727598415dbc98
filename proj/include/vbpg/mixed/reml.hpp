#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "vbpg/core/error.hpp"

namespace vbpg::mixed {

/// Grouping factors of an intercept-only random-effects model. Nesting is
/// documentary: level labels are globally unique, so nested factors are
/// fitted as crossed ones.
struct EffectSpec {
  std::vector<std::string> factors;
  std::map<std::string, std::string> nested_in;

  std::optional<std::size_t> index_of(const std::string& f) const {
    for (std::size_t i = 0; i < factors.size(); ++i)
      if (factors[i] == f) return i;
    return std::nullopt;
  }

  void validate() const {
    std::set<std::string> seen;
    for (const auto& f : factors)
      if (!seen.insert(f).second) fail(ErrorKind::InvalidConfig, "factor '" + f + "' declared twice");
    for (const auto& [child, parent] : nested_in) {
      if (!index_of(child) || !index_of(parent))
        fail(ErrorKind::UnknownFactor, "nesting " + child + " in " + parent + " names an undeclared factor");
      std::string cur = parent;
      for (std::size_t hops = 0; hops <= factors.size(); ++hops) {
        if (cur == child) fail(ErrorKind::InvalidConfig, "cyclic nesting through '" + child + "'");
        auto it = nested_in.find(cur);
        if (it == nested_in.end()) break;
        cur = it->second;
      }
    }
  }
};

struct Observation {
  double y = 0.0;
  std::vector<std::string> levels;  // aligned with EffectSpec::factors
  double weight = 1.0;
};

struct FitOptions {
  double rel_tol = 1e-8;
  int max_iter = 500;
  /// Plain EM iterations before switching to average-information steps.
  int em_warmup = 3;
  bool average_information = true;
};

/// Cross-products of the response, intercept and level indicators. One pass
/// over the data; shards merge by level name.
class SufficientStats {
 public:
  explicit SufficientStats(std::size_t n_factors = 0) : levels_(n_factors), names_(n_factors), zw_(n_factors),
                                                        zwy_(n_factors), cross_(n_factors * n_factors) {}

  std::size_t factors() const { return levels_.size(); }
  std::size_t n() const { return n_; }

  void add(const Observation& o) {
    if (o.levels.size() != levels_.size())
      fail(ErrorKind::UnknownFactor, "observation has " + std::to_string(o.levels.size()) + " levels for " +
                                         std::to_string(levels_.size()) + " factors");
    if (!std::isfinite(o.y) || !(o.weight > 0.0) || !std::isfinite(o.weight))
      fail(ErrorKind::BadField, "observation response must be finite with positive weight");
    const double w = o.weight;
    ++n_;
    sw_ += w;
    swy_ += w * o.y;
    swyy_ += w * o.y * o.y;
    ids_.resize(levels_.size());
    for (std::size_t f = 0; f < levels_.size(); ++f) {
      auto [it, fresh] = levels_[f].try_emplace(o.levels[f], names_[f].size());
      if (fresh) {
        names_[f].push_back(o.levels[f]);
        zw_[f].push_back(0.0);
        zwy_[f].push_back(0.0);
      }
      ids_[f] = it->second;
      zw_[f][ids_[f]] += w;
      zwy_[f][ids_[f]] += w * o.y;
    }
    for (std::size_t a = 0; a < levels_.size(); ++a)
      for (std::size_t b = a + 1; b < levels_.size(); ++b) cross_[a * levels_.size() + b][key(ids_[a], ids_[b])] += w;
  }

  void merge(const SufficientStats& o) {
    if (o.factors() != factors()) fail(ErrorKind::InvalidConfig, "merging statistics of different specs");
    n_ += o.n_;
    sw_ += o.sw_;
    swy_ += o.swy_;
    swyy_ += o.swyy_;
    std::vector<std::vector<std::size_t>> remap(factors());
    for (std::size_t f = 0; f < factors(); ++f)
      for (std::size_t j = 0; j < o.names_[f].size(); ++j) {
        auto [it, fresh] = levels_[f].try_emplace(o.names_[f][j], names_[f].size());
        if (fresh) {
          names_[f].push_back(o.names_[f][j]);
          zw_[f].push_back(0.0);
          zwy_[f].push_back(0.0);
        }
        remap[f].push_back(it->second);
        zw_[f][it->second] += o.zw_[f][j];
        zwy_[f][it->second] += o.zwy_[f][j];
      }
    for (std::size_t a = 0; a < factors(); ++a)
      for (std::size_t b = a + 1; b < factors(); ++b)
        for (const auto& [k, w] : o.cross_[a * factors() + b])
          cross_[a * factors() + b][key(remap[a][k >> 32], remap[b][k & 0xffffffffu])] += w;
  }

  // accessors used by the solver
  double sw() const { return sw_; }
  double swy() const { return swy_; }
  double swyy() const { return swyy_; }
  const std::vector<std::string>& level_names(std::size_t f) const { return names_[f]; }
  const std::vector<double>& zw(std::size_t f) const { return zw_[f]; }
  const std::vector<double>& zwy(std::size_t f) const { return zwy_[f]; }
  const std::unordered_map<std::uint64_t, double>& cross(std::size_t a, std::size_t b) const {
    return cross_[a * factors() + b];
  }
  static std::size_t first(std::uint64_t k) { return static_cast<std::size_t>(k >> 32); }
  static std::size_t second(std::uint64_t k) { return static_cast<std::size_t>(k & 0xffffffffu); }

 private:
  static std::uint64_t key(std::size_t a, std::size_t b) { return (static_cast<std::uint64_t>(a) << 32) | b; }

  std::size_t n_ = 0;
  double sw_ = 0.0, swy_ = 0.0, swyy_ = 0.0;
  std::vector<std::unordered_map<std::string, std::size_t>> levels_;
  std::vector<std::vector<std::string>> names_;
  std::vector<std::vector<double>> zw_, zwy_;
  std::vector<std::unordered_map<std::uint64_t, double>> cross_;
  std::vector<std::size_t> ids_;
};

struct FactorFit {
  std::string name;
  double variance = 0.0;
  bool dropped = false;
  std::vector<std::string> levels;  // sorted
  std::vector<double> blup;
  std::vector<double> weight;  // summed observation weight per level

  std::optional<double> find(const std::string& level) const {
    auto it = std::lower_bound(levels.begin(), levels.end(), level);
    if (it == levels.end() || *it != level) return std::nullopt;
    return blup[static_cast<std::size_t>(it - levels.begin())];
  }
};

struct MixedFit {
  double intercept = 0.0;
  double residual_variance = 0.0;
  std::vector<FactorFit> factors;
  std::size_t n = 0;
  int iterations = 0;
  double relative_change = 0.0;
  bool converged = true;
  std::vector<std::string> warnings;

  const FactorFit* factor(const std::string& name) const {
    for (const auto& f : factors)
      if (f.name == name) return &f;
    return nullptr;
  }
  const FactorFit& require(const std::string& name) const {
    const FactorFit* f = factor(name);
    if (!f) fail(ErrorKind::UnknownFactor, "factor '" + name + "' not in model");
    return *f;
  }
  double component(const std::string& name) const { return require(name).variance; }
  /// BLUP of a level; unseen levels sit at their prior mean 0.
  double blup(const std::string& name, const std::string& level) const {
    return require(name).find(level).value_or(0.0);
  }
};

namespace detail {

struct Layout {
  std::vector<std::size_t> kept;     // spec factor indices with >= 2 levels
  std::vector<std::size_t> offset;   // first global level index per kept factor
  std::vector<std::vector<std::size_t>> sorted_of_local;  // per spec factor
  std::size_t q = 0;
};

inline Layout layout_of(const SufficientStats& st) {
  Layout l;
  l.sorted_of_local.resize(st.factors());
  for (std::size_t f = 0; f < st.factors(); ++f) {
    const auto& names = st.level_names(f);
    std::vector<std::size_t> order(names.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return names[a] < names[b]; });
    l.sorted_of_local[f].resize(names.size());
    for (std::size_t r = 0; r < order.size(); ++r) l.sorted_of_local[f][order[r]] = r;
    if (names.size() >= 2) {
      l.kept.push_back(f);
      l.offset.push_back(l.q);
      l.q += names.size();
    }
  }
  return l;
}

/// Gram matrix of [y, 1, Z] in the weight metric.
inline Eigen::MatrixXd gram(const SufficientStats& st, const Layout& l) {
  const Eigen::Index m = static_cast<Eigen::Index>(l.q + 2);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(m, m);
  g(0, 0) = st.swyy();
  g(0, 1) = g(1, 0) = st.swy();
  g(1, 1) = st.sw();
  for (std::size_t k = 0; k < l.kept.size(); ++k) {
    const std::size_t f = l.kept[k];
    for (std::size_t j = 0; j < st.zw(f).size(); ++j) {
      const auto i = static_cast<Eigen::Index>(2 + l.offset[k] + l.sorted_of_local[f][j]);
      g(i, i) = st.zw(f)[j];
      g(i, 1) = g(1, i) = st.zw(f)[j];
      g(i, 0) = g(0, i) = st.zwy(f)[j];
    }
  }
  for (std::size_t ka = 0; ka < l.kept.size(); ++ka)
    for (std::size_t kb = ka + 1; kb < l.kept.size(); ++kb) {
      const std::size_t fa = l.kept[ka], fb = l.kept[kb];
      for (const auto& [key, w] : st.cross(fa, fb)) {
        const auto i = static_cast<Eigen::Index>(2 + l.offset[ka] + l.sorted_of_local[fa][SufficientStats::first(key)]);
        const auto j = static_cast<Eigen::Index>(2 + l.offset[kb] + l.sorted_of_local[fb][SufficientStats::second(key)]);
        g(i, j) += w;
        g(j, i) += w;
      }
    }
  return g;
}

}  // namespace detail

/// REML by iterating the mixed-model equations. Average-information Newton
/// steps after a short EM warm-up; a step that leaves the parameter space
/// falls back to EM. Steps are damped to keep components positive; one that
/// shrinks below a tiny floor is fixed at the boundary (and released again if
/// the boundary score turns positive).
inline MixedFit fit(const SufficientStats& st, const EffectSpec& spec, const FitOptions& opt = {}) {
  spec.validate();
  if (st.factors() != spec.factors.size()) fail(ErrorKind::InvalidConfig, "statistics do not match the spec");
  if (st.n() < 2) fail(ErrorKind::InvalidConfig, "need at least two observations to fit");

  const detail::Layout lay = detail::layout_of(st);
  MixedFit out;
  out.n = st.n();
  out.factors.resize(spec.factors.size());
  for (std::size_t f = 0; f < spec.factors.size(); ++f) {
    auto& ff = out.factors[f];
    ff.name = spec.factors[f];
    const auto& names = st.level_names(f);
    ff.levels.resize(names.size());
    ff.weight.assign(names.size(), 0.0);
    ff.blup.assign(names.size(), 0.0);
    for (std::size_t j = 0; j < names.size(); ++j) {
      ff.levels[lay.sorted_of_local[f][j]] = names[j];
      ff.weight[lay.sorted_of_local[f][j]] = st.zw(f)[j];
    }
    if (names.size() < 2) {
      ff.dropped = true;
      out.warnings.push_back("factor '" + ff.name + "' has fewer than two levels and was dropped");
    }
  }

  const double mean = st.swy() / st.sw();
  const double ss = std::max(0.0, st.swyy() - st.swy() * mean);
  out.intercept = mean;
  if (ss <= 1e-12 * std::max(st.swyy(), 1e-300) || lay.kept.empty()) {
    out.residual_variance = ss / static_cast<double>(st.n() - 1);
    return out;
  }
  const double scale = ss / static_cast<double>(st.n() - 1);
  const double floor = 1e-10 * scale;

  const Eigen::MatrixXd G = detail::gram(st, lay);
  const std::size_t K = lay.kept.size();
  const auto nq = [&](std::size_t k) { return static_cast<double>(st.level_names(lay.kept[k]).size()); };
  const double n = static_cast<double>(st.n());

  std::vector<double> sig(K, scale / (2.0 * static_cast<double>(K)));
  std::vector<int> released(K, 0);
  double s2e = scale / 2.0;

  // Per-iteration state at the current parameters.
  struct Eval {
    std::vector<Eigen::Index> idx;  // Gram indices of the MME unknowns (1 then active Z)
    Eigen::LLT<Eigen::MatrixXd> llt;
    Eigen::VectorXd sol;            // alpha then active u
    std::vector<double> trace, uu;  // per kept factor
    double ywe = 0.0, ewe = 0.0;
    Eigen::VectorXd u_full;         // length q, zero for inactive
  };
  auto active = [&](std::size_t k) { return sig[k] > 0.0; };
  auto evaluate = [&]() {
    Eval e;
    e.idx.push_back(1);
    std::vector<std::size_t> owner;
    for (std::size_t k = 0; k < K; ++k)
      if (active(k))
        for (std::size_t j = 0; j < static_cast<std::size_t>(nq(k)); ++j) {
          e.idx.push_back(static_cast<Eigen::Index>(2 + lay.offset[k] + j));
          owner.push_back(k);
        }
    const auto p = static_cast<Eigen::Index>(e.idx.size());
    Eigen::MatrixXd C(p, p);
    Eigen::VectorXd rhs(p);
    for (Eigen::Index a = 0; a < p; ++a) {
      rhs(a) = G(e.idx[a], 0);
      for (Eigen::Index b = 0; b < p; ++b) C(a, b) = G(e.idx[a], e.idx[b]);
    }
    for (Eigen::Index a = 1; a < p; ++a) C(a, a) += s2e / sig[owner[static_cast<std::size_t>(a - 1)]];
    e.llt.compute(C);
    if (e.llt.info() != Eigen::Success) fail(ErrorKind::Singular, "mixed-model equations are not positive definite");
    e.sol = e.llt.solve(rhs);
    const Eigen::MatrixXd linv =
        e.llt.matrixL().solve(Eigen::MatrixXd::Identity(p, p));
    const Eigen::VectorXd dinv = linv.colwise().squaredNorm().transpose();
    e.trace.assign(K, 0.0);
    e.uu.assign(K, 0.0);
    e.u_full = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(lay.q));
    for (Eigen::Index a = 1; a < p; ++a) {
      const std::size_t k = owner[static_cast<std::size_t>(a - 1)];
      e.trace[k] += dinv(a);
      e.uu[k] += e.sol(a) * e.sol(a);
      e.u_full(e.idx[a] - 2) = e.sol(a);
    }
    e.ywe = G(0, 0) - e.sol.dot(rhs);
    e.ewe = e.ywe;
    for (std::size_t k = 0; k < K; ++k)
      if (active(k)) e.ewe -= s2e / sig[k] * e.uu[k];
    return e;
  };

  // Average-information matrix and score over (active components, s2e).
  auto ai_step = [&](const Eval& e, std::vector<double>& nsig, double& ns2e) -> bool {
    std::vector<std::size_t> par;
    for (std::size_t k = 0; k < K; ++k)
      if (active(k)) par.push_back(k);
    const std::size_t P = par.size() + 1;
    const auto m = static_cast<Eigen::Index>(lay.q + 2);
    std::vector<Eigen::VectorXd> c(P, Eigen::VectorXd::Zero(m)), cr(P);
    for (std::size_t i = 0; i < par.size(); ++i) {
      const std::size_t k = par[i];
      for (std::size_t j = 0; j < static_cast<std::size_t>(nq(k)); ++j) {
        const auto g = static_cast<Eigen::Index>(lay.offset[k] + j);
        c[i](2 + g) = e.u_full(g) / sig[k];
      }
    }
    c[P - 1](0) = 1.0 / s2e;
    c[P - 1](1) = -e.sol(0) / s2e;
    c[P - 1].tail(static_cast<Eigen::Index>(lay.q)) = -e.u_full / s2e;
    const auto p = static_cast<Eigen::Index>(e.idx.size());
    for (std::size_t i = 0; i < P; ++i) {
      const Eigen::VectorXd gc = G * c[i];
      Eigen::VectorXd rhs(p);
      for (Eigen::Index a = 0; a < p; ++a) rhs(a) = gc(e.idx[a]);
      const Eigen::VectorXd x = e.llt.solve(rhs);
      cr[i] = c[i];
      for (Eigen::Index a = 0; a < p; ++a) cr[i](e.idx[a]) -= x(a);
    }
    Eigen::MatrixXd ai(P, P);
    for (std::size_t i = 0; i < P; ++i) {
      const Eigen::VectorXd gr = G * cr[i];
      for (std::size_t j = 0; j < P; ++j) ai(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) = 0.5 * c[j].dot(gr) / s2e;
    }
    ai = 0.5 * (ai + ai.transpose()).eval();
    Eigen::VectorXd score(P);
    double used = 0.0;
    for (std::size_t i = 0; i < par.size(); ++i) {
      const std::size_t k = par[i];
      const double edf = nq(k) - s2e / sig[k] * e.trace[k];
      used += edf;
      score(static_cast<Eigen::Index>(i)) = -0.5 * (edf / sig[k] - e.uu[k] / (sig[k] * sig[k]));
    }
    score(static_cast<Eigen::Index>(P - 1)) = -0.5 * ((n - 1.0 - used) / s2e - e.ewe / (s2e * s2e));
    Eigen::LDLT<Eigen::MatrixXd> ldlt(ai);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) return false;
    const Eigen::VectorXd delta = ldlt.solve(score);
    if (!delta.allFinite()) return false;
    // Damp the step so no parameter drops below a tenth of its value.
    double t = 1.0;
    auto limit = [&](double cur, double d) {
      if (cur + d < 0.1 * cur) t = std::min(t, 0.9 * cur / -d);
    };
    for (std::size_t i = 0; i < par.size(); ++i) limit(sig[par[i]], delta(static_cast<Eigen::Index>(i)));
    limit(s2e, delta(static_cast<Eigen::Index>(P - 1)));
    ns2e = s2e + t * delta(static_cast<Eigen::Index>(P - 1));
    if (!(ns2e > 0.0)) return false;
    nsig = sig;
    for (std::size_t i = 0; i < par.size(); ++i) {
      const double v = sig[par[i]] + t * delta(static_cast<Eigen::Index>(i));
      nsig[par[i]] = v > floor ? v : 0.0;
    }
    return true;
  };

  auto em_step = [&](const Eval& e, std::vector<double>& nsig, double& ns2e) {
    nsig = sig;
    for (std::size_t k = 0; k < K; ++k) {
      if (!active(k)) continue;
      const double v = (e.uu[k] + s2e * e.trace[k]) / nq(k);
      nsig[k] = v > floor ? v : 0.0;
    }
    ns2e = std::max(e.ywe / (n - 1.0), floor);
  };

  // Score of an inactive component at the boundary.
  auto boundary_score = [&](const Eval& e, std::size_t k) {
    const auto p = static_cast<Eigen::Index>(e.idx.size());
    double tr = 0.0, quad = 0.0;
    for (std::size_t j = 0; j < static_cast<std::size_t>(nq(k)); ++j) {
      const auto gi = static_cast<Eigen::Index>(2 + lay.offset[k] + j);
      Eigen::VectorXd g(p);
      for (Eigen::Index a = 0; a < p; ++a) g(a) = G(gi, e.idx[a]);
      tr += (G(gi, gi) - g.dot(e.llt.solve(g))) / s2e;
      const double zwe = G(gi, 0) - g.dot(e.sol);
      quad += zwe * zwe / (s2e * s2e);
    }
    return -0.5 * (tr - quad);
  };

  double change = 1.0;
  int it = 0;
  bool converged = false;
  while (it < opt.max_iter) {
    ++it;
    Eval e = evaluate();
    std::vector<double> nsig;
    double ns2e = s2e;
    const bool newton = opt.average_information && it > opt.em_warmup && ai_step(e, nsig, ns2e);
    if (!newton) em_step(e, nsig, ns2e);
    change = std::abs(ns2e - s2e) / ns2e;
    for (std::size_t k = 0; k < K; ++k) {
      if (nsig[k] == sig[k]) continue;
      change = std::max(change, nsig[k] > 0.0 ? std::abs(nsig[k] - sig[k]) / nsig[k] : 1.0);
    }
    sig = nsig;
    s2e = ns2e;
    if (change < opt.rel_tol) {
      Eval fin = evaluate();
      bool reopened = false;
      for (std::size_t k = 0; k < K; ++k) {
        if (active(k) || released[k] >= 2) continue;
        if (boundary_score(fin, k) > 1e-6 * nq(k) / s2e) {
          sig[k] = 0.01 * s2e;
          ++released[k];
          reopened = true;
        }
      }
      if (!reopened) {
        converged = true;
        break;
      }
    }
  }

  const Eval fin = evaluate();
  out.intercept = fin.sol(0);
  out.residual_variance = s2e;
  out.iterations = it;
  out.relative_change = change;
  out.converged = converged;
  if (!converged)
    out.warnings.push_back("variance components still moving after " + std::to_string(it) + " iterations");
  for (std::size_t k = 0; k < K; ++k) {
    auto& ff = out.factors[lay.kept[k]];
    ff.variance = sig[k];
    for (std::size_t j = 0; j < ff.levels.size(); ++j)
      ff.blup[j] = fin.u_full(static_cast<Eigen::Index>(lay.offset[k] + j));
  }
  return out;
}

inline MixedFit fit(const std::vector<Observation>& obs, const EffectSpec& spec, const FitOptions& opt = {}) {
  SufficientStats st(spec.factors.size());
  for (const auto& o : obs) st.add(o);
  return fit(st, spec, opt);
}

/// Intercept (optional) plus the BLUPs of `subset` at the given levels.
/// Factors missing from `assignment` or unseen levels contribute 0.
inline double predict_linear(const MixedFit& f, const std::map<std::string, std::string>& assignment,
                             const std::vector<std::string>& subset, bool include_intercept = true) {
  double v = include_intercept ? f.intercept : 0.0;
  for (const auto& name : subset) {
    const FactorFit& ff = f.require(name);
    auto it = assignment.find(name);
    if (it != assignment.end()) v += ff.find(it->second).value_or(0.0);
  }
  return v;
}

/// sigma2_a / (sigma2_a + sigma2_b); 0.5 with `degenerate` set when both are 0.
inline double variance_ratio(const MixedFit& f, const std::string& a, const std::string& b,
                             bool* degenerate = nullptr) {
  const double va = f.component(a), vb = f.component(b);
  if (degenerate) *degenerate = false;
  if (va + vb <= 0.0) {
    if (degenerate) *degenerate = true;
    return 0.5;
  }
  return va / (va + vb);
}

inline nlohmann::json to_json(const MixedFit& f) {
  nlohmann::json j;
  j["intercept"] = f.intercept;
  j["residual_variance"] = f.residual_variance;
  j["n"] = f.n;
  auto comps = nlohmann::json::object();
  auto blups = nlohmann::json::object();
  auto dropped = nlohmann::json::array();
  for (const auto& ff : f.factors) {
    comps[ff.name] = ff.variance;
    auto b = nlohmann::json::object();
    for (std::size_t i = 0; i < ff.levels.size(); ++i) b[ff.levels[i]] = ff.blup[i];
    blups[ff.name] = std::move(b);
    if (ff.dropped) dropped.push_back(ff.name);
  }
  j["components"] = std::move(comps);
  j["blups"] = std::move(blups);
  j["dropped"] = std::move(dropped);
  j["factor_order"] = [&] {
    auto a = nlohmann::json::array();
    for (const auto& ff : f.factors) a.push_back(ff.name);
    return a;
  }();
  j["convergence"] = {{"iterations", f.iterations}, {"relative_change", f.relative_change}, {"converged", f.converged}};
  j["warnings"] = f.warnings;
  return j;
}

inline MixedFit fit_from_json(const nlohmann::json& j) {
  MixedFit f;
  f.intercept = j.at("intercept").get<double>();
  f.residual_variance = j.at("residual_variance").get<double>();
  f.n = j.value("n", std::size_t{0});
  std::set<std::string> dropped;
  for (const auto& d : j.value("dropped", nlohmann::json::array())) dropped.insert(d.get<std::string>());
  for (const auto& name : j.at("factor_order")) {
    FactorFit ff;
    ff.name = name.get<std::string>();
    ff.variance = j.at("components").at(ff.name).get<double>();
    ff.dropped = dropped.contains(ff.name);
    for (auto& [lvl, v] : j.at("blups").at(ff.name).items()) {
      ff.levels.push_back(lvl);
      ff.blup.push_back(v.get<double>());
    }
    // object keys come back sorted, matching the fit's level order
    f.factors.push_back(std::move(ff));
  }
  const auto& c = j.at("convergence");
  f.iterations = c.value("iterations", 0);
  f.relative_change = c.value("relative_change", 0.0);
  f.converged = c.value("converged", true);
  f.warnings = j.value("warnings", std::vector<std::string>{});
  return f;
}

}  // namespace vbpg::mixed
