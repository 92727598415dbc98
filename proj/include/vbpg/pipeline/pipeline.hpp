#pragma once

#include <algorithm>
#include <chrono>
#include <exception>
#include <mutex>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>
#include <openssl/evp.h>

#include "vbpg/attribution/points_gained.hpp"
#include "vbpg/attribution/pythagorean.hpp"
#include "vbpg/core/error.hpp"
#include "vbpg/ingest/archive.hpp"
#include "vbpg/ingest/assemble.hpp"
#include "vbpg/ingest/libero.hpp"
#include "vbpg/ingest/parse.hpp"
#include "vbpg/io/csv.hpp"
#include "vbpg/markov/absorb.hpp"
#include "vbpg/sos/dataset.hpp"
#include "vbpg/sos/models.hpp"

namespace vbpg::pipeline {

inline constexpr std::string_view kToolVersion = "0.1.0";

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Digests and manifests
// ---------------------------------------------------------------------------

inline std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx, md, &len) != 1) {
    EVP_MD_CTX_free(ctx);
    fail(ErrorKind::InvalidConfig, "sha256 unavailable");
  }
  EVP_MD_CTX_free(ctx);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(len * 2);
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(ErrorKind::MissingInput, "cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::string sha256_file(const fs::path& p) { return sha256_hex(read_file(p)); }

inline void require_file(const fs::path& p) {
  if (!fs::is_regular_file(p)) fail(ErrorKind::MissingInput, "input not found: " + p.string());
}

inline std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

inline constexpr std::string_view kManifestName = "manifest.json";

/// One per output directory. Digests exclude the manifest itself.
struct RunManifest {
  std::string command;
  nlohmann::json config;
  std::map<std::string, std::string> inputs, outputs;  // path -> sha256
  std::uint64_t seed = 0;
  std::string started, finished;

  std::string config_hash() const { return sha256_hex(config.dump()); }

  nlohmann::json to_json() const {
    return {{"command", command},
            {"tool_version", kToolVersion},
            {"config", config},
            {"config_hash", config_hash()},
            {"seed", seed},
            {"inputs", inputs},
            {"outputs", outputs},
            {"started", started},
            {"finished", finished}};
  }

  void add_input(const fs::path& p) { inputs[p.string()] = sha256_file(p); }

  /// Digests every regular file in `dir` except the manifest.
  void collect_outputs(const fs::path& dir) {
    std::vector<fs::path> files;
    for (const auto& e : fs::recursive_directory_iterator(dir))
      if (e.is_regular_file() && e.path().filename() != kManifestName) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) outputs[fs::relative(f, dir).generic_string()] = sha256_file(f);
  }

  void write(const fs::path& dir) {
    finished = utc_now();
    collect_outputs(dir);
    std::ofstream f(dir / kManifestName, std::ios::binary);
    f << to_json().dump(2) << '\n';
  }
};

/// Recomputes output digests and compares them with the manifest.
inline bool verify_manifest(const fs::path& dir, std::vector<std::string>* mismatches = nullptr) {
  const auto j = nlohmann::json::parse(read_file(dir / kManifestName));
  bool ok = true;
  for (const auto& [name, digest] : j.at("outputs").items()) {
    const fs::path p = dir / name;
    if (!fs::exists(p) || sha256_file(p) != digest.get<std::string>()) {
      ok = false;
      if (mismatches) mismatches->push_back(name);
    }
  }
  return ok;
}

// ---------------------------------------------------------------------------
// Parallel helpers
// ---------------------------------------------------------------------------

/// Contiguous [begin, end) ranges of points sharing a match id.
inline std::vector<std::pair<std::size_t, std::size_t>> match_ranges(const std::vector<PointLog>& points) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t b = 0;
  for (std::size_t i = 1; i <= points.size(); ++i)
    if (i == points.size() || points[i].match_id != points[b].match_id) {
      out.emplace_back(b, i);
      b = i;
    }
  return out;
}

/// Runs fn(chunk_index) for every chunk on up to `threads` workers.
template <class Fn>
void for_each_chunk(std::size_t chunks, unsigned threads, Fn fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(chunks, 1))));
  if (threads == 1) {
    for (std::size_t i = 0; i < chunks; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::exception_ptr err;
  std::mutex m;
  for (unsigned w = 0; w < threads; ++w)
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < chunks; i += threads) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(m);
          if (!err) err = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (err) std::rethrow_exception(err);
}

// ---------------------------------------------------------------------------
// Stage: ingest
// ---------------------------------------------------------------------------

struct IngestOutput {
  std::vector<PointLog> points;
  std::vector<ingest::Rejection> rejections;
  ingest::LiberoInference liberos;
  std::size_t contact_rows = 0, lineup_rows = 0;
  std::size_t unterminated = 0, missing_lineups = 0, rotation_mismatches = 0;

  nlohmann::json summary() const {
    return {{"points", points.size()},
            {"contact_rows", contact_rows},
            {"lineup_rows", lineup_rows},
            {"rejections", rejections.size()},
            {"ambiguous_liberos", liberos.ambiguous.size()},
            {"unterminated", unterminated},
            {"missing_lineups", missing_lineups},
            {"rotation_mismatches", rotation_mismatches}};
  }
};

inline IngestOutput ingest_records(const std::vector<ingest::PointHeader>& headers,
                                   const std::vector<ContactRecord>& records, const std::vector<LineupState>& lineups,
                                   bool strict = false) {
  IngestOutput out;
  out.liberos = ingest::infer_liberos(records, lineups);
  auto a = ingest::assemble_points(headers, records, lineups, out.liberos, strict);
  out.points = std::move(a.points);
  out.rejections = std::move(a.rejections);
  out.unterminated = a.unterminated;
  out.missing_lineups = a.missing_lineups;
  out.rotation_mismatches = a.rotation_mismatches;
  return out;
}

inline IngestOutput ingest_files(const fs::path& contacts, const std::optional<fs::path>& lineups,
                                 const ingest::Schema& schema, bool strict = false) {
  require_file(contacts);
  if (lineups) require_file(*lineups);
  auto cp = ingest::parse_contact_file(contacts.string(), schema, strict);
  ingest::LineupParse lp;
  if (lineups) lp = ingest::parse_lineup_file(lineups->string(), schema, strict);
  IngestOutput out = ingest_records(cp.headers, cp.records, lp.lineups, strict);
  out.contact_rows = cp.rows;
  out.lineup_rows = lp.rows;
  std::vector<ingest::Rejection> all = std::move(cp.rejections);
  all.insert(all.end(), lp.rejections.begin(), lp.rejections.end());
  all.insert(all.end(), out.rejections.begin(), out.rejections.end());
  out.rejections = std::move(all);
  return out;
}

inline void write_rejections(std::ostream& os, const std::vector<ingest::Rejection>& rs) {
  io::CsvWriter w(os);
  w.row({"row", "kind", "reason"});
  for (const auto& r : rs) w.row({std::to_string(r.row), std::string(to_string(r.kind)), r.reason});
}

// ---------------------------------------------------------------------------
// Stage: point win probability
// ---------------------------------------------------------------------------

struct PwpOutput {
  markov::TransitionModel model;
  markov::PwpTable table;
};

inline PwpOutput fit_pwp(const std::vector<PointLog>& points, std::uint64_t support = markov::kDefaultSupport,
                         unsigned steps = markov::kDefaultSteps) {
  if (points.empty()) fail(ErrorKind::DegenerateSeason, "no points to fit");
  PwpOutput o;
  o.model = markov::count_transitions(points, support);
  o.table = markov::absorb(o.model, steps);
  return o;
}

inline nlohmann::json pwp_to_json(const markov::PwpTable& t) {
  nlohmann::json states = nlohmann::json::array();
  for (std::size_t i = 0; i < t.size(); ++i)
    states.push_back({{"state", t.names[i]}, {"v", t.v[i]}, {"visits", t.visits[i]}, {"residual", t.residual[i]}});
  return {{"steps", t.steps}, {"states", states}};
}

inline markov::PwpTable pwp_from_json(const nlohmann::json& j) {
  markov::PwpTable t;
  try {
    t.steps = j.at("steps").get<unsigned>();
    for (const auto& s : j.at("states")) {
      const auto name = s.at("state").get<std::string>();
      t.index.emplace(name, static_cast<std::uint32_t>(t.names.size()));
      t.names.push_back(name);
      t.states.push_back(markov::parse_state_key(name));
      t.v.push_back(s.at("v").get<double>());
      t.visits.push_back(s.at("visits").get<std::uint64_t>());
      t.residual.push_back(s.at("residual").get<double>());
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::BadField, std::string("bad pwp table: ") + e.what());
  }
  return t;
}

inline void write_pwp_csv(std::ostream& os, const PwpOutput& o) {
  io::CsvWriter w(os);
  w.row({"state", "v", "visits", "backoff_level", "row_support", "residual"});
  for (std::size_t i = 0; i < o.table.size(); ++i)
    w.row({o.table.names[i], io::exact(o.table.v[i]), std::to_string(o.model.visits[i]),
           std::to_string(o.model.backoff_level[i]), std::to_string(o.model.row_support[i]),
           io::exact(o.table.residual[i])});
}

inline void write_transitions_csv(std::ostream& os, const markov::TransitionModel& m) {
  io::CsvWriter w(os);
  w.row({"from", "to", "count", "p"});
  for (const auto& [a, b, n] : m.counts) w.row({m.names[a], m.names[b], std::to_string(n), io::exact(m.p1.at(a, b))});
}

// ---------------------------------------------------------------------------
// Stage: strength-of-schedule datasets and fits
// ---------------------------------------------------------------------------

struct Datasets {
  sos::ResponsibilityTable responsibility;
  sos::ServeDataset serves;
  sos::AttackDataset attacks;
};

/// Serve and attack datasets, built per match in parallel and merged in
/// archive order.
inline Datasets build_datasets(const std::vector<PointLog>& points, const markov::PwpTable& pwp, unsigned threads = 1,
                               std::uint64_t support = markov::kDefaultSupport,
                               std::uint64_t responsibility_support = sos::kResponsibilitySupport) {
  Datasets d;
  d.responsibility = sos::build_responsibility_tables(points, responsibility_support);
  const auto ranges = match_ranges(points);
  std::vector<sos::ServeDataset> serves(ranges.size());
  std::vector<sos::AttackDataset> attacks(ranges.size());
  for_each_chunk(ranges.size(), threads, [&](std::size_t c) {
    for (std::size_t i = ranges[c].first; i < ranges[c].second; ++i) {
      const auto states = markov::encode_state_sequence(points[i]);
      sos::add_point_serves(serves[c], points[i], states, pwp);
      sos::add_point_attacks(attacks[c].obs, attacks[c], points[i], states, pwp, d.responsibility);
    }
  });
  for (std::size_t c = 0; c < ranges.size(); ++c) {
    auto& s = serves[c];
    std::move(s.obs.begin(), s.obs.end(), std::back_inserter(d.serves.obs));
    d.serves.service_errors += s.service_errors;
    d.serves.no_reception += s.no_reception;
    auto& a = attacks[c];
    std::move(a.obs.begin(), a.obs.end(), std::back_inserter(d.attacks.obs));
    for (std::size_t k = 0; k < 5; ++k) d.attacks.category_counts[k] += a.category_counts[k];
    d.attacks.gaps += a.gaps;
    std::move(a.unlabelable.begin(), a.unlabelable.end(), std::back_inserter(d.attacks.unlabelable));
  }
  sos::finish_attack_dataset(d.attacks, support);
  return d;
}

struct SosFits {
  mixed::MixedFit serve;
  sos::AttackFits attack;

  nlohmann::json to_json() const {
    return {{"serve", mixed::to_json(serve)}, {"attack", sos::to_json(attack)}};
  }
  static SosFits from_json(const nlohmann::json& j) {
    SosFits f;
    try {
      f.serve = mixed::fit_from_json(j.at("serve"));
      f.attack = sos::attack_fits_from_json(j.at("attack"));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorKind::BadField, std::string("bad fit file: ") + e.what());
    }
    return f;
  }
};

/// Fits the serve model and the seven attack models, one per worker.
inline SosFits fit_sos(const Datasets& d, unsigned threads = 1, const mixed::FitOptions& opt = {}) {
  if (d.serves.obs.size() < 2) fail(ErrorKind::DegenerateSeason, "fewer than two serve observations");
  SosFits f;
  std::array<std::optional<mixed::MixedFit>, sos::kAttackModels> fits;
  std::array<std::size_t, sos::kAttackModels> rows{};
  for_each_chunk(sos::kAttackModels + 1, threads, [&](std::size_t i) {
    if (i == 0) {
      f.serve = sos::fit_serve_model(d.serves.obs, opt);
      return;
    }
    const int k = static_cast<int>(i);
    const auto st = sos::attack_stats(d.attacks.obs, k);
    rows[i - 1] = st.n();
    if (st.n() >= 2) fits[i - 1] = mixed::fit(st, sos::attack_spec(k), opt);
  });
  for (int k = 1; k <= sos::kAttackModels; ++k) {
    f.attack.fits[static_cast<std::size_t>(k - 1)] = fits[static_cast<std::size_t>(k - 1)];
    f.attack.rows[static_cast<std::size_t>(k - 1)] = rows[static_cast<std::size_t>(k - 1)];
  }
  return f;
}

/// Throws NotConverged naming every model that hit the iteration cap.
inline void require_converged(const SosFits& f) {
  std::string bad;
  if (!f.serve.converged) bad = "SV";
  for (int k = 1; k <= sos::kAttackModels; ++k)
    if (f.attack.has(k) && !f.attack.model(k).converged) bad += (bad.empty() ? "" : ", ") + std::to_string(k);
  if (!bad.empty()) fail(ErrorKind::NotConverged, "variance components did not converge for models: " + bad);
}

inline nlohmann::json dataset_summary(const Datasets& d) {
  nlohmann::json cats;
  for (std::size_t k = 0; k < 5; ++k)
    cats[std::string(markov::category_name(static_cast<markov::AttackCategory>(k)))] = d.attacks.category_counts[k];
  return {{"serves", d.serves.obs.size()},
          {"service_errors", d.serves.service_errors},
          {"aces_without_reception", d.serves.no_reception},
          {"attacks", d.attacks.obs.size()},
          {"attack_categories", cats},
          {"charting_gaps", d.attacks.gaps},
          {"unlabelable", d.attacks.unlabelable},
          {"responsibility_ties", d.responsibility.ties()}};
}

// ---------------------------------------------------------------------------
// Stage: attribution
// ---------------------------------------------------------------------------

/// Entries for every serve and attack, computed per match in parallel and
/// concatenated in archive order (serves first, then attacks).
inline std::vector<attribution::PointsGainedEntry> attribute(const Datasets& d, const SosFits& f, unsigned threads = 1) {
  const auto ratios = attribution::AttackRatios::from(f.attack);
  const std::size_t chunk = 4096;
  const std::size_t ns = (d.serves.obs.size() + chunk - 1) / chunk;
  const std::size_t na = (d.attacks.obs.size() + chunk - 1) / chunk;
  std::vector<std::vector<attribution::PointsGainedEntry>> parts(ns + na);
  for_each_chunk(ns + na, threads, [&](std::size_t c) {
    auto& out = parts[c];
    if (c < ns) {
      for (std::size_t i = c * chunk; i < std::min(d.serves.obs.size(), (c + 1) * chunk); ++i)
        for (auto& e : attribution::pg_serve_receive(d.serves.obs[i], f.serve)) out.push_back(std::move(e));
    } else {
      const std::size_t a = c - ns;
      for (std::size_t i = a * chunk; i < std::min(d.attacks.obs.size(), (a + 1) * chunk); ++i)
        for (auto& e : attribution::pg_attack(d.attacks.obs[i], f.attack, ratios).entries) out.push_back(std::move(e));
    }
  });
  std::vector<attribution::PointsGainedEntry> all;
  for (auto& p : parts) std::move(p.begin(), p.end(), std::back_inserter(all));
  return all;
}

inline sos::ContactRef parse_ref(const std::string& s) {
  sos::ContactRef r;
  const auto a = s.rfind('/');
  const auto b = a == std::string::npos ? a : s.rfind('/', a - 1);
  const auto c = b == std::string::npos ? b : s.rfind('/', b - 1);
  if (c == std::string::npos) fail(ErrorKind::BadField, "bad contact reference '" + s + "'");
  try {
    r.match_id = s.substr(0, c);
    r.set_number = std::stoi(s.substr(c + 1, b - c - 1));
    r.point_index = std::stoi(s.substr(b + 1, a - b - 1));
    r.contact = std::stoul(s.substr(a + 1));
  } catch (const std::exception&) {
    fail(ErrorKind::BadField, "bad contact reference '" + s + "'");
  }
  return r;
}

inline sos::PgRole parse_role(const std::string& s) {
  for (auto r : {sos::PgRole::Server, sos::PgRole::Receiver, sos::PgRole::Attacker, sos::PgRole::Setter,
                 sos::PgRole::Blocker, sos::PgRole::Digger})
    if (sos::role_label(r) == s) return r;
  fail(ErrorKind::BadField, "unknown role '" + s + "'");
}

/// Reads back a ledger written by attribution::write_ledger.
inline std::vector<attribution::PointsGainedEntry> read_ledger(const fs::path& path) {
  require_file(path);
  auto reader = io::CsvReader::from_file(path.string());
  io::CsvRow row;
  std::size_t line = 0;
  if (!reader.next(row, line)) fail(ErrorKind::MissingColumn, "empty ledger " + path.string());
  const std::vector<std::string> expected{"contact", "event",  "player", "team",           "conference",
                                          "role",    "skill",  "component", "observed",    "share",
                                          "raw_pg",  "intercept_term", "sos", "adjusted_pg"};
  if (row != expected) fail(ErrorKind::MissingColumn, "unexpected ledger header in " + path.string());
  std::vector<attribution::PointsGainedEntry> out;
  while (reader.next(row, line)) {
    if (row.size() != expected.size()) fail(ErrorKind::BadField, "ledger line " + std::to_string(line));
    attribution::PointsGainedEntry e;
    e.ref = parse_ref(row[0]);
    e.event = parse_ref(row[1]);
    e.player = row[2];
    e.team = row[3];
    e.conference = row[4];
    e.role = parse_role(row[5]);
    e.component = row[7] == "SV" ? 0 : std::stoi(row[7]);
    e.observed = row[8] == "1";
    e.share = std::stod(row[9]);
    e.raw_pg = std::stod(row[10]);
    e.intercept_term = std::stod(row[11]);
    e.sos = std::stod(row[12]);
    e.adjusted_pg = std::stod(row[13]);
    out.push_back(std::move(e));
  }
  return out;
}

/// Season totals per team from point logs. A set goes to the team that won
/// more of its points, a match to the team that won more sets.
inline std::vector<attribution::TeamSeason> team_seasons(const std::vector<PointLog>& points) {
  std::map<TeamId, attribution::TeamSeason> teams;
  std::map<std::pair<MatchId, int>, std::map<TeamId, int>> set_points;
  std::map<MatchId, std::pair<TeamId, TeamId>> sides;
  for (const auto& p : points) {
    const TeamId& loser = p.winner == p.serving_team ? p.receiving_team : p.serving_team;
    auto& w = teams[p.winner];
    auto& l = teams[loser];
    w.team = p.winner;
    l.team = loser;
    w.points_scored += 1.0;
    l.points_allowed += 1.0;
    auto& sp = set_points[{p.match_id, p.set_number}];
    sp[p.winner] += 1;
    sp.try_emplace(loser, 0);
    sides.try_emplace(p.match_id, p.serving_team, p.receiving_team);
  }
  std::map<MatchId, std::map<TeamId, int>> sets_won;
  for (const auto& [key, sp] : set_points) {
    auto best = std::max_element(sp.begin(), sp.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
    ++sets_won[key.first][best->first];
  }
  for (const auto& [match, pair] : sides) {
    auto& sw = sets_won[match];
    const int a = sw[pair.first], b = sw[pair.second];
    teams[pair.first].matches_played += 1.0;
    teams[pair.second].matches_played += 1.0;
    if (a != b) teams[a > b ? pair.first : pair.second].matches_won += 1.0;
  }
  std::vector<attribution::TeamSeason> out;
  for (auto& [t, s] : teams) out.push_back(std::move(s));
  return out;
}

}  // namespace vbpg::pipeline
