// Acceptance run: one PASS/FAIL line per criterion.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "../support.hpp"
#include "vbpg/attribution/points_gained.hpp"
#include "vbpg/attribution/pythagorean.hpp"
#include "vbpg/markov/absorb.hpp"
#include "vbpg/markov/encode.hpp"
#include "vbpg/mixed/reml.hpp"
#include "vbpg/synth/oracle.hpp"

using namespace vbpg;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(int n, double limit_s, const std::function<Outcome()>& check) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double s = std::chrono::duration<double>(Clock::now() - t0).count();
  if (s > limit_s) {
    o.pass = false;
    o.detail += " (over time limit)";
  }
  if (!o.pass) ++failures;
  std::printf("%s criterion %d: %s [%.2f s, limit %.0f s]\n", o.pass ? "PASS" : "FAIL", n, o.detail.c_str(), s,
              limit_s);
  std::fflush(stdout);
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

std::vector<double> ranks(const std::vector<double>& v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j) + 1.0;
    i = j + 1;
  }
  return r;
}

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  const auto ra = ranks(a), rb = ranks(b);
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(ra.begin(), ra.end(), 0.0) / n, mb = std::accumulate(rb.begin(), rb.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    sab += (ra[i] - ma) * (rb[i] - mb);
    saa += (ra[i] - ma) * (ra[i] - ma);
    sbb += (rb[i] - mb) * (rb[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

// ---------------------------------------------------------------------------

const char* kSampleRally =
    "(S, SV) \xE2\x86\x92 (R, R#) \xE2\x86\x92 (R, R#S#) \xE2\x86\x92 (R, R#S#AX6) \xE2\x86\x92 (S, D+) \xE2\x86\x92 "
    "(S, D+S#) \xE2\x86\x92 (S, D+S#AV5) \xE2\x86\x92 (R, B+) \xE2\x86\x92 (S, D!) \xE2\x86\x92 (S, D!S#) \xE2\x86\x92 "
    "(S, D!S#AX5) \xE2\x86\x92 (S, W)";

Outcome criterion1() {
  const auto seq = markov::format_sequence(markov::encode_state_sequence(testing::sample_rally()));
  return {seq == kSampleRally, seq == kSampleRally ? "sample rally encodes to the 12-state sequence" : "got " + seq};
}

Outcome criterion2() {
  synth::SyntheticConfig cfg;
  cfg.matches = 900;
  const auto season = synth::generate_season(cfg, 4);
  auto in = pipeline::ingest_records(season.headers, season.records, season.lineups);
  if (in.points.size() < 100000) return {false, "season too short: " + std::to_string(in.points.size())};
  in.points.resize(100000);
  const auto o = pipeline::fit_pwp(in.points);
  const auto& m = o.model;

  double row_err = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    double s = 0.0;
    for (std::size_t k = m.p1.row_ptr[i]; k < m.p1.row_ptr[i + 1]; ++k) s += m.p1.val[k];
    row_err = std::max(row_err, std::abs(s - 1.0));
  }
  double residual = 0.0;
  for (std::size_t i = 0; i < m.size(); ++i)
    if (!m.is_terminal(static_cast<std::uint32_t>(i))) residual = std::max(residual, o.table.residual[i]);

  std::size_t checked = 0, bad = 0;
  double worst = 0.0;
  for (std::uint32_t i = 0; i < m.size(); ++i) {
    if (m.is_terminal(i) || m.visits[i] < 1000) continue;
    ++checked;
    const auto mc = synth::mc_point_win_prob(m, i, 100000, cfg.seed);
    const double z = std::abs(mc.estimate - o.table.v[i]) / std::max(mc.se, 1e-12);
    worst = std::max(worst, z);
    if (std::abs(mc.estimate - o.table.v[i]) > 3.0 * mc.se || mc.unabsorbed) ++bad;
  }
  const bool pass = checked > 0 && bad == 0 && row_err <= 1e-12 && residual <= 1e-9;
  std::ostringstream d;
  d << checked << " states with >=1000 visits, " << bad << " outside 3 SE (worst " << fmt("%.2f", worst)
    << " SE); max |row sum - 1| = " << fmt("%.1e", row_err) << "; max residual = " << fmt("%.1e", residual);
  return {pass, d.str()};
}

Outcome criterion3() {
  const int m = 30, k = 20;
  double worst = 0.0;
  std::size_t shrink_bad = 0, boundary = 0;
  for (unsigned seed = 1; seed <= 50; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 0.6), e(0.0, 1.0);
    std::vector<mixed::Observation> obs;
    std::vector<double> means(m, 0.0);
    double grand = 0.0;
    for (int i = 0; i < m; ++i) {
      const double u = g(rng);
      for (int j = 0; j < k; ++j) {
        const double y = 2.0 + u + e(rng);
        obs.push_back({y, {"g" + std::to_string(i)}});
        means[static_cast<std::size_t>(i)] += y / k;
        grand += y / (m * k);
      }
    }
    double ssb = 0.0, ssw = 0.0;
    for (int i = 0; i < m; ++i) ssb += k * std::pow(means[static_cast<std::size_t>(i)] - grand, 2);
    for (std::size_t i = 0; i < obs.size(); ++i) ssw += std::pow(obs[i].y - means[i / k], 2);
    const double msb = ssb / (m - 1), mse = ssw / (m * (k - 1));
    double s2e = mse, s2a = (msb - mse) / k;
    if (s2a <= 0.0) {
      ++boundary;
      s2a = 0.0;
      s2e = (ssb + ssw) / (m * k - 1);
    }
    const auto f = mixed::fit(obs, mixed::EffectSpec{{"g"}, {}});
    worst = std::max(worst, std::abs(f.residual_variance - s2e) / s2e);
    if (s2a > 0.0) worst = std::max(worst, std::abs(f.component("g") - s2a) / s2a);
    else if (f.component("g") != 0.0) worst = std::max(worst, 1.0);
    const auto& gf = f.require("g");
    for (int i = 0; i < m; ++i) {
      const double b = *gf.find("g" + std::to_string(i));
      if (std::abs(b) > std::abs(means[static_cast<std::size_t>(i)] - f.intercept) + 1e-12) ++shrink_bad;
    }
  }
  std::ostringstream d;
  d << "50 seeds, max relative error " << fmt("%.1e", worst) << " vs closed form (" << boundary
    << " boundary fits); shrinkage violations " << shrink_bad;
  return {worst <= 1e-6 && shrink_bad == 0, d.str()};
}

const testing::Corpus& league() {
  static const testing::Corpus c = [] {
    testing::Corpus x;
    synth::SyntheticConfig cfg;
    x.season = synth::generate_season(cfg, 4);
    x.ingest = pipeline::ingest_records(x.season.headers, x.season.records, x.season.lineups);
    x.pwp = pipeline::fit_pwp(x.ingest.points);
    x.data = pipeline::build_datasets(x.ingest.points, x.pwp.table, 4);
    x.fits = pipeline::fit_sos(x.data, 4);
    x.entries = pipeline::attribute(x.data, x.fits, 4);
    return x;
  }();
  return c;
}

Outcome criterion4() {
  const auto& c = league();
  const auto& g = c.season.truth;
  const auto& m1 = c.fits.attack.model(1);
  const double ratio = mixed::variance_ratio(m1, "attacker", "setter");

  std::map<PlayerId, std::size_t> attacks, serves, receptions;
  for (const auto& o : c.data.attacks.obs) ++attacks[o.attacker];
  for (const auto& o : c.data.serves.obs) {
    ++serves[o.server];
    ++receptions[o.receiver];
  }
  auto corr = [&](const std::map<PlayerId, std::size_t>& n, const mixed::MixedFit& f, const char* factor,
                  double synth::PlayerTruth::*truth, double sign, std::size_t* players) {
    std::vector<double> est, tru;
    for (const auto& [p, count] : n) {
      if (count < 100) continue;
      est.push_back(sign * f.blup(factor, p));
      tru.push_back(g.player(p).*truth);
    }
    *players = est.size();
    return est.size() >= 3 ? spearman(est, tru) : 0.0;
  };
  std::size_t na = 0, ns = 0, nr = 0;
  const double ra = corr(attacks, m1, "attacker", &synth::PlayerTruth::attack, 1.0, &na);
  const double rs = corr(serves, c.fits.serve, "server", &synth::PlayerTruth::serve, 1.0, &ns);
  const double rr = corr(receptions, c.fits.serve, "receiver", &synth::PlayerTruth::receive, -1.0, &nr);
  std::ostringstream d;
  d << "variance_ratio " << fmt("%.4f", ratio) << " (target 0.9 +/- 0.05); Spearman attackers " << fmt("%.3f", ra)
    << " (n=" << na << "), servers " << fmt("%.3f", rs) << " (n=" << ns << "), receivers " << fmt("%.3f", rr)
    << " (n=" << nr << ")";
  const bool pass = std::abs(ratio - 0.9) <= 0.05 && ra >= 0.9 && rs >= 0.9 && rr >= 0.9 && na && ns && nr;
  return {pass, d.str()};
}

Outcome criterion5() {
  const auto& c = league();
  const auto ratios = attribution::AttackRatios::from(c.fits.attack);
  constexpr double tol = 1e-12;
  std::size_t share_bad = 0, sos_bad = 0, unreached_bad = 0, total_bad = 0, entries = 0;
  auto sum_blups = [](const mixed::MixedFit& f, const std::vector<std::pair<std::string, std::string>>& lv) {
    double s = 0.0;
    for (const auto& [factor, level] : lv)
      if (const auto* ff = f.factor(factor)) s += ff->find(level).value_or(0.0);
    return s;
  };
  for (const auto& o : c.data.serves.obs) {
    const auto pair = attribution::pg_serve_receive(o, c.fits.serve);
    const auto& f = c.fits.serve;
    const double a = f.intercept;
    const double rcv = sum_blups(f, {{"rcv_conf", o.rcv_conf}, {"rcv_team", o.rcv_team}, {"receiver", o.receiver}});
    const double srv = sum_blups(f, {{"srv_conf", o.srv_conf}, {"srv_team", o.srv_team}, {"server", o.server}});
    // Adjusted minus raw is the negated schedule term: a + opponent BLUPs.
    if (std::abs((pair[0].adjusted_pg - pair[0].raw_pg) + (a + rcv)) > tol) ++sos_bad;
    if (std::abs((pair[1].adjusted_pg - pair[1].raw_pg) - (a + srv)) > tol) ++sos_bad;
    entries += 2;
  }
  for (const auto& o : c.data.attacks.obs) {
    const auto a = attribution::pg_attack(o, c.fits.attack, ratios);
    std::array<double, 4> tot{};
    for (int k = 1; k <= sos::kAttackModels; ++k) {
      const auto i = static_cast<std::size_t>(k - 1);
      if (!o.reaches(k)) {
        for (std::size_t r = 0; r < 4; ++r)
          if (a.raw[i][r] != 0.0 || a.adjusted[i][r] != 0.0 || a.share[i][r] != 0.0) ++unreached_bad;
        continue;
      }
      if (std::abs(a.share[i][0] + a.share[i][1] - 1.0) > tol) ++share_bad;
      if (k >= 2 && std::abs(a.share[i][2] + a.share[i][3] - 1.0) > tol) ++share_bad;
      for (std::size_t r = 0; r < 4; ++r) tot[r] += a.raw[i][r];
    }
    const auto t = a.total(false);
    for (std::size_t r = 0; r < 4; ++r)
      if (std::abs(t[r] - tot[r]) > tol) ++total_bad;
    for (const auto& e : a.entries) {
      ++entries;
      const auto& f = c.fits.attack.model(e.component);
      const int k = e.component;
      double term = 0.0;
      if (sos::is_offense(e.role)) {
        if (k >= 2) {
          std::vector<std::pair<std::string, std::string>> lv{
              {"def_conf", o.def_conf}, {"def_team", o.def_team}, {"blocker", o.blocker.player}};
          if (k >= 6) lv.emplace_back("digger", o.digger->player);
          term = e.share * (f.intercept + sum_blups(f, lv));
        }
      } else {
        term = -e.share * (f.intercept + sum_blups(f, {{"off_conf", o.conf},
                                                       {"off_team", o.team},
                                                       {"attacker", o.attacker},
                                                       {"setter", o.setter}}));
      }
      if (std::abs((e.adjusted_pg - e.raw_pg) + term) > tol) ++sos_bad;
      if (k == 1 && !sos::is_offense(e.role)) ++share_bad;
      if (k < 6 && e.role == sos::PgRole::Digger) ++unreached_bad;
    }
  }
  std::ostringstream d;
  d << entries << " entries checked at 1e-12: share violations " << share_bad << ", schedule-term violations "
    << sos_bad << ", nonzero unreached components " << unreached_bad << ", role-total violations " << total_bad;
  return {share_bad + sos_bad + unreached_bad + total_bad == 0 && entries > 0, d.str()};
}

Outcome criterion6() {
  const auto& d = league().data.attacks;
  std::size_t cells = 0, bad = 0;
  double worst = 0.0;
  for (int k = 1; k <= 4; ++k) {
    std::map<std::string, std::pair<double, std::size_t>> sum;
    std::set<std::string> backed_off;
    for (const auto& o : d.obs) {
      if (!o.reaches(k)) continue;
      auto& s = sum[o.pre.str()];
      s.first += o.response(k);
      ++s.second;
      if (o.y.level[static_cast<std::size_t>(k - 1)] != 0) backed_off.insert(o.pre.str());
    }
    for (const auto& [pre, s] : sum) {
      if (backed_off.contains(pre)) continue;
      ++cells;
      const double mean = s.first / static_cast<double>(s.second);
      worst = std::max(worst, std::abs(mean));
      if (std::abs(mean) > 1e-10) ++bad;
    }
  }
  std::ostringstream o;
  o << cells << " (pre-state, split) cells without back-off, max |weighted mean| " << fmt("%.1e", worst) << ", "
    << bad << " above 1e-10";
  return {cells > 0 && bad == 0, o.str()};
}

Outcome criterion7() {
  bool ok = true;
  for (double a : {0.5, 1.0, 9.3, 20.0})
    for (double pts : {1.0, 500.0, 7200.0}) ok = ok && attribution::pythagorean_winpct(pts, pts, a) == 0.5;
  const double p = attribution::pythagorean_winpct(502, 498, 9.3);
  const bool in_range = p >= 0.515 && p <= 0.522;
  synth::LeagueConfig lc;
  lc.alpha = 9.3;
  const auto fit = attribution::fit_alpha(synth::generate_pythagorean_league(lc));
  const bool recovered = std::abs(fit.alpha - 9.3) <= 0.5;
  std::ostringstream d;
  d << "PS=PA gives 0.5: " << (ok ? "yes" : "no") << "; share 0.502 -> " << fmt("%.4f", p) << "; fitted alpha "
    << fmt("%.3f", fit.alpha) << " on " << lc.teams << " synthetic teams";
  return {ok && in_range && recovered, d.str()};
}

int run(const std::string& args) {
  const std::string cmd = std::string(VBPG_CLI) + " " + args + " >/dev/null 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

std::map<std::string, std::string> pipeline_digests(const fs::path& dir, unsigned threads) {
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string t = "--threads " + std::to_string(threads) + " --seed 8 ";
  const auto p = [&](const char* s) { return (dir / s).string(); };
  { std::ofstream(dir / "cfg.json") << R"({"matches": 120})"; }
  const std::vector<std::string> steps{
      t + "simulate --config " + p("cfg.json") + " --out " + p("sim"),
      t + "ingest --contacts " + p("sim/contacts.csv") + " --lineups " + p("sim/lineups.csv") + " --schema " +
          p("sim/schema.json") + " --out " + p("ing"),
      t + "fit-pwp --points " + p("ing") + " --out " + p("pwp"),
      t + "fit-sos --points " + p("ing") + " --pwp " + p("pwp") + " --out " + p("sos"),
      t + "attribute --points " + p("ing") + " --pwp " + p("pwp") + " --sos " + p("sos") + " --out " + p("att"),
      t + "report --ledger " + p("att") + " --points " + p("ing") + " --out " + p("rep"),
  };
  for (const auto& s : steps)
    if (run(s) != 0) throw std::runtime_error("stage failed: " + s);
  std::map<std::string, std::string> out;
  for (const char* stage : {"sim", "ing", "pwp", "sos", "att", "rep"}) {
    if (!pipeline::verify_manifest(dir / stage)) throw std::runtime_error(std::string("manifest mismatch in ") + stage);
    const auto j = nlohmann::json::parse(pipeline::read_file(dir / stage / "manifest.json"));
    for (const auto& [name, digest] : j.at("outputs").items()) out[std::string(stage) + "/" + name] = digest;
  }
  return out;
}

Outcome criterion8() {
  const auto base = fs::temp_directory_path() / "vbpg_acceptance";
  const auto a = pipeline_digests(base / "run1_t1", 1);
  const auto b = pipeline_digests(base / "run2_t1", 1);
  const auto c = pipeline_digests(base / "run3_t4", 4);
  std::size_t diff = 0;
  for (const auto& [name, d] : a) {
    if (!b.contains(name) || b.at(name) != d) ++diff;
    if (!c.contains(name) || c.at(name) != d) ++diff;
  }
  diff += (a.size() != b.size()) + (a.size() != c.size());
  fs::remove_all(base);
  std::ostringstream o;
  o << a.size() << " output digests compared across two runs and threads {1, 4}: " << diff << " differ";
  return {diff == 0 && !a.empty(), o.str()};
}

}  // namespace

int main() {
  report(1, 1, criterion1);
  report(2, 120, criterion2);
  report(3, 30, criterion3);
  // Criteria 5 and 6 reuse the league fitted here.
  report(4, 600, criterion4);
  report(5, 60, criterion5);
  report(6, 60, criterion6);
  report(7, 10, criterion7);
  report(8, 900, criterion8);
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
