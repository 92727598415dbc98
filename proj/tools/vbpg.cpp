// vbpg: command-line driver for the points-gained pipeline.

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <thread>

#include "vbpg/attribution/aggregate.hpp"
#include "vbpg/attribution/ds_report.hpp"
#include "vbpg/attribution/pythagorean.hpp"
#include "vbpg/ingest/archive.hpp"
#include "vbpg/ingest/schema.hpp"
#include "vbpg/pipeline/pipeline.hpp"
#include "vbpg/synth/generator.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vbpg;

namespace {

constexpr const char* kPoints = "points.jsonl";
constexpr const char* kPwp = "pwp.json";
constexpr const char* kFits = "fits.json";
constexpr const char* kLedger = "ledger.csv";
constexpr const char* kDatasets = "datasets.json";

struct Globals {
  unsigned threads = std::max(1u, std::thread::hardware_concurrency());
  std::optional<std::uint64_t> seed;
  bool strict = false;
};

/// A directory argument resolves to the named file inside it.
fs::path resolve(const fs::path& p, const char* file) { return fs::is_directory(p) ? p / file : p; }

json read_json(const fs::path& p) {
  pipeline::require_file(p);
  try {
    return json::parse(pipeline::read_file(p));
  } catch (const json::exception& e) {
    fail(ErrorKind::BadField, p.string() + ": " + e.what());
  }
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream f(p, std::ios::binary);
  if (!f) fail(ErrorKind::MissingInput, "cannot write " + p.string());
  return f;
}

void write_json(const fs::path& p, const json& j) { open_out(p) << j.dump(2) << '\n'; }

void prepare(const fs::path& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) fail(ErrorKind::MissingInput, "cannot create output directory " + out.string());
  fs::remove(out / pipeline::kManifestName, ec);
}

pipeline::RunManifest start(const std::string& command, json config, const Globals& g) {
  pipeline::RunManifest m;
  m.command = command;
  config["threads"] = g.threads;
  config["strict"] = g.strict;
  m.config = std::move(config);
  m.seed = g.seed.value_or(0);
  m.started = pipeline::utc_now();
  return m;
}

std::vector<PointLog> load_points(const fs::path& p, pipeline::RunManifest& m) {
  const auto path = resolve(p, kPoints);
  pipeline::require_file(path);
  m.add_input(path);
  return ingest::read_archive(path.string());
}

markov::PwpTable load_pwp(const fs::path& p, pipeline::RunManifest& m) {
  const auto path = resolve(p, kPwp);
  auto j = read_json(path);
  m.add_input(path);
  return pipeline::pwp_from_json(j);
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string config, out;
};

int run_simulate(const SimulateArgs& a, const Globals& g) {
  synth::SyntheticConfig cfg;
  if (!a.config.empty()) cfg = synth::SyntheticConfig::from_json(read_json(a.config));
  if (g.seed) cfg.seed = *g.seed;
  cfg.validate();
  Globals gg = g;
  gg.seed = cfg.seed;
  prepare(a.out);
  auto m = start("simulate", cfg.to_json(), gg);
  if (!a.config.empty()) m.add_input(a.config);
  const auto season = synth::generate_season(cfg, g.threads);
  synth::write_season(season, a.out);
  m.write(a.out);
  return 0;
}

struct IngestArgs {
  std::string contacts, lineups, schema, out;
};

int run_ingest(const IngestArgs& a, const Globals& g) {
  ingest::Schema schema;
  if (!a.schema.empty()) {
    pipeline::require_file(a.schema);
    schema = ingest::Schema::load(a.schema);
  }
  std::optional<fs::path> lineups;
  if (!a.lineups.empty()) lineups = a.lineups;
  auto res = pipeline::ingest_files(a.contacts, lineups, schema, g.strict);
  prepare(a.out);
  auto m = start("ingest", {{"contacts", a.contacts}, {"lineups", a.lineups}, {"schema", a.schema}}, g);
  m.add_input(a.contacts);
  if (lineups) m.add_input(*lineups);
  if (!a.schema.empty()) m.add_input(a.schema);
  ingest::write_archive((fs::path(a.out) / kPoints).string(), res.points);
  {
    auto f = open_out(fs::path(a.out) / "rejections.csv");
    pipeline::write_rejections(f, res.rejections);
  }
  write_json(fs::path(a.out) / "summary.json", res.summary());
  m.write(a.out);
  return 0;
}

struct FitPwpArgs {
  std::string points, out;
  std::uint64_t support = markov::kDefaultSupport;
  unsigned steps = markov::kDefaultSteps;
};

int run_fit_pwp(const FitPwpArgs& a, const Globals& g) {
  auto m = start("fit-pwp", {{"support", a.support}, {"steps", a.steps}}, g);
  const auto points = load_points(a.points, m);
  const auto o = pipeline::fit_pwp(points, a.support, a.steps);
  prepare(a.out);
  write_json(fs::path(a.out) / kPwp, pipeline::pwp_to_json(o.table));
  {
    auto f = open_out(fs::path(a.out) / "pwp.csv");
    pipeline::write_pwp_csv(f, o);
  }
  {
    auto f = open_out(fs::path(a.out) / "transitions.csv");
    pipeline::write_transitions_csv(f, o.model);
  }
  m.write(a.out);
  return 0;
}

struct FitSosArgs {
  std::string points, pwp, out;
  std::uint64_t support = markov::kDefaultSupport;
  std::uint64_t responsibility_support = sos::kResponsibilitySupport;
};

int run_fit_sos(const FitSosArgs& a, const Globals& g) {
  auto m = start("fit-sos", {{"support", a.support}, {"responsibility_support", a.responsibility_support}}, g);
  const auto points = load_points(a.points, m);
  const auto pwp = load_pwp(a.pwp, m);
  const auto d = pipeline::build_datasets(points, pwp, g.threads, a.support, a.responsibility_support);
  const auto fits = pipeline::fit_sos(d, g.threads);
  prepare(a.out);
  const fs::path out(a.out);
  {
    auto f = open_out(out / "responsibility.csv");
    d.responsibility.write_csv(f);
  }
  write_json(out / kFits, fits.to_json());
  write_json(out / "serve_model.json", mixed::to_json(fits.serve));
  for (int k = 1; k <= sos::kAttackModels; ++k)
    if (fits.attack.has(k))
      write_json(out / ("attack_model_" + std::to_string(k) + ".json"), mixed::to_json(fits.attack.model(k)));
  {
    auto f = open_out(out / "sos_ledger.csv");
    sos::write_sos_ledger(f, d.serves.obs, fits.serve, d.attacks.obs, fits.attack);
  }
  auto summary = pipeline::dataset_summary(d);
  summary["support"] = a.support;
  summary["responsibility_support"] = a.responsibility_support;
  write_json(out / kDatasets, summary);
  m.write(a.out);
  pipeline::require_converged(fits);
  return 0;
}

struct AttributeArgs {
  std::string points, pwp, sos, out;
};

int run_attribute(const AttributeArgs& a, const Globals& g) {
  auto m = start("attribute", json::object(), g);
  const auto points = load_points(a.points, m);
  const auto pwp = load_pwp(a.pwp, m);
  const fs::path sos_dir = fs::is_directory(a.sos) ? fs::path(a.sos) : fs::path(a.sos).parent_path();
  const auto fits_path = resolve(a.sos, kFits);
  const auto fits = pipeline::SosFits::from_json(read_json(fits_path));
  m.add_input(fits_path);
  std::uint64_t support = markov::kDefaultSupport, rsupport = sos::kResponsibilitySupport;
  if (fs::exists(sos_dir / kDatasets)) {
    const auto ds = read_json(sos_dir / kDatasets);
    support = ds.value("support", support);
    rsupport = ds.value("responsibility_support", rsupport);
    m.add_input(sos_dir / kDatasets);
  }
  m.config = {{"support", support}, {"responsibility_support", rsupport}, {"threads", g.threads},
              {"strict", g.strict}};
  const auto d = pipeline::build_datasets(points, pwp, g.threads, support, rsupport);
  const auto entries = pipeline::attribute(d, fits, g.threads);
  prepare(a.out);
  {
    auto f = open_out(fs::path(a.out) / kLedger);
    attribution::write_ledger(f, entries);
  }
  json totals = json::object();
  for (const auto& e : entries) {
    auto& t = totals[std::string(sos::role_label(e.role))];
    if (t.is_null()) t = {{"entries", 0}, {"raw_pg", 0.0}, {"adjusted_pg", 0.0}};
    t["entries"] = t["entries"].get<std::size_t>() + 1;
    t["raw_pg"] = t["raw_pg"].get<double>() + e.raw_pg;
    t["adjusted_pg"] = t["adjusted_pg"].get<double>() + e.adjusted_pg;
  }
  const auto ratios = attribution::AttackRatios::from(fits.attack);
  json r = json::array();
  for (std::size_t k = 0; k < sos::kAttackModels; ++k)
    r.push_back({{"model", k + 1},
                 {"attacker_share", ratios.offense[k] ? json(*ratios.offense[k]) : json()},
                 {"blocker_share", ratios.defense[k] ? json(*ratios.defense[k]) : json()},
                 {"degenerate", ratios.degenerate[k]}});
  write_json(fs::path(a.out) / "summary.json", {{"entries", entries.size()}, {"roles", totals}, {"ratios", r}});
  m.write(a.out);
  return 0;
}

struct ReportArgs {
  std::string ledger, points, out, level = "player", basis = "per_set";
  std::size_t min_contacts = 0, top = 25, bins = 20;
  bool raw = false;
};

int run_report(const ReportArgs& a, const Globals& g) {
  auto m = start("report",
                 {{"level", a.level}, {"basis", a.basis}, {"min_contacts", a.min_contacts}, {"top", a.top},
                  {"bins", a.bins}, {"raw", a.raw}},
                 g);
  const auto level = attribution::parse_level(a.level);
  const auto basis = attribution::parse_basis(a.basis);
  const auto ledger = resolve(a.ledger, kLedger);
  const auto entries = pipeline::read_ledger(ledger);
  m.add_input(ledger);
  const auto points = load_points(a.points, m);
  const auto part = attribution::Participation::of(points);
  prepare(a.out);
  const fs::path out(a.out);

  attribution::AggregateOptions opt;
  opt.min_contacts = a.min_contacts;
  const auto rows = attribution::aggregate(entries, part, level, basis, opt);
  {
    auto f = open_out(out / ("aggregate_" + a.level + ".csv"));
    attribution::write_aggregate_csv(f, rows);
  }
  {
    auto f = open_out(out / ("table_" + a.level + ".csv"));
    attribution::write_player_table(f, rows, a.top, !a.raw);
  }
  {
    const auto conf = attribution::aggregate(entries, part, attribution::Level::Conference, attribution::Basis::PerSet);
    auto f = open_out(out / "conference_sos.csv");
    attribution::write_conference_sos(f, conf, a.top);
  }
  {
    auto f = open_out(out / "histograms.csv");
    io::CsvWriter(f).row({"series", "lower", "upper", "count"});
    for (auto s : {SkillType::Serve, SkillType::Reception, SkillType::Set, SkillType::Attack, SkillType::Block,
                   SkillType::Dig}) {
      const auto v = attribution::per_contact_by_skill(entries, s, attribution::default_min_contacts(s));
      attribution::write_histogram(f, std::string(skill_name(s)), attribution::histogram(v, a.bins));
    }
  }
  {
    attribution::DsOptions ds;
    ds.adjusted = false;
    json j;
    try {
      j = attribution::ds_substitution_report(entries, points, ds).to_json();
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::InsufficientClassData) throw;
      j = {{"skipped", e.what()}};
    }
    write_json(out / "ds_report.json", j);
  }
  {
    const auto seasons = pipeline::team_seasons(points);
    json j = {{"default_alpha", attribution::kDefaultPythagoreanAlpha}};
    if (seasons.size() >= 2) {
      const auto fit = attribution::fit_alpha(seasons);
      j["fitted_alpha"] = fit.alpha;
      j["objective"] = fit.objective;
    }
    write_json(out / "pythagorean.json", j);
    auto f = open_out(out / "pythagorean.csv");
    io::CsvWriter w(f);
    w.row({"team", "points_scored", "points_allowed", "matches_won", "matches_played", "win_fraction",
           "expected_win_fraction"});
    for (const auto& s : seasons)
      w.row({s.team, io::exact(s.points_scored), io::exact(s.points_allowed), io::exact(s.matches_won),
             io::exact(s.matches_played), io::exact(s.win_fraction()),
             io::exact(attribution::pythagorean_winpct(s.points_scored, s.points_allowed,
                                                       attribution::kDefaultPythagoreanAlpha))});
  }
  m.write(a.out);
  return 0;
}

int report_error(ErrorKind kind, const std::string& message) {
  json j = {{"error", std::string(to_string(kind))}, {"exit_code", exit_code_for(kind)}, {"message", message}};
  const std::string prefix = "input not found: ";
  const auto at = message.find(prefix);
  if (kind == ErrorKind::MissingInput && at != std::string::npos) j["path"] = message.substr(at + prefix.size());
  std::cerr << j.dump() << '\n';
  return exit_code_for(kind);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Points-gained analytics for volleyball contact logs"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
  auto* seed_opt = app.add_option("--seed", seed, "Random seed");
  app.add_flag("--strict", g.strict, "Fail on the first invalid row instead of rejecting it");

  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Generate a synthetic season");
  c_sim->add_option("--config", sim.config, "Generator config (JSON)");
  c_sim->add_option("--out", sim.out, "Output directory")->required();

  IngestArgs ing;
  auto* c_ing = app.add_subcommand("ingest", "Validate contact logs and build the point archive");
  c_ing->add_option("--contacts", ing.contacts, "Contact log CSV")->required();
  c_ing->add_option("--lineups", ing.lineups, "Lineup CSV");
  c_ing->add_option("--schema", ing.schema, "Schema JSON");
  c_ing->add_option("--out", ing.out, "Output directory")->required();

  FitPwpArgs pwp;
  auto* c_pwp = app.add_subcommand("fit-pwp", "Fit the transition kernel and point win probabilities");
  c_pwp->add_option("--points", pwp.points, "Point archive or ingest directory")->required();
  c_pwp->add_option("--support", pwp.support, "Minimum row count before back-off");
  c_pwp->add_option("--steps", pwp.steps, "Matrix power");
  c_pwp->add_option("--out", pwp.out, "Output directory")->required();

  FitSosArgs fs_args;
  auto* c_sos = app.add_subcommand("fit-sos", "Fit the strength-of-schedule models");
  c_sos->add_option("--points", fs_args.points, "Point archive or ingest directory")->required();
  c_sos->add_option("--pwp", fs_args.pwp, "fit-pwp output directory")->required();
  c_sos->add_option("--support", fs_args.support, "Minimum baseline cell count");
  c_sos->add_option("--responsibility-support", fs_args.responsibility_support,
                    "Minimum responsibility key count");
  c_sos->add_option("--out", fs_args.out, "Output directory")->required();

  AttributeArgs att;
  auto* c_att = app.add_subcommand("attribute", "Compute the points-gained ledger");
  c_att->add_option("--points", att.points, "Point archive or ingest directory")->required();
  c_att->add_option("--pwp", att.pwp, "fit-pwp output directory")->required();
  c_att->add_option("--sos", att.sos, "fit-sos output directory")->required();
  c_att->add_option("--out", att.out, "Output directory")->required();

  ReportArgs rep;
  auto* c_rep = app.add_subcommand("report", "Aggregate the ledger into tables and histograms");
  c_rep->add_option("--ledger", rep.ledger, "Ledger CSV or attribute directory")->required();
  c_rep->add_option("--points", rep.points, "Point archive or ingest directory")->required();
  c_rep->add_option("--level", rep.level, "player, team or conference");
  c_rep->add_option("--basis", rep.basis, "per_set, per_contact or per_opportunity");
  c_rep->add_option("--min-contacts", rep.min_contacts, "Drop entities with fewer contacts");
  c_rep->add_option("--top", rep.top, "Rows in the ranked table");
  c_rep->add_option("--bins", rep.bins, "Histogram bins");
  c_rep->add_flag("--raw", rep.raw, "Rank by raw instead of adjusted PG");
  c_rep->add_option("--out", rep.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error(ErrorKind::Usage, e.what());
  }
  if (*seed_opt) g.seed = seed;

  try {
    if (*c_sim) return run_simulate(sim, g);
    if (*c_ing) return run_ingest(ing, g);
    if (*c_pwp) return run_fit_pwp(pwp, g);
    if (*c_sos) return run_fit_sos(fs_args, g);
    if (*c_att) return run_attribute(att, g);
    if (*c_rep) return run_report(rep, g);
  } catch (const Error& e) {
    return report_error(e.kind(), e.what());
  } catch (const std::exception& e) {
    return report_error(ErrorKind::BadField, e.what());
  }
  return report_error(ErrorKind::Usage, "no subcommand");
}
