#pragma once

#include <fstream>
#include <sstream>
#include <string>

#include "vbpg/core/types.hpp"
#include "vbpg/ingest/assemble.hpp"
#include "vbpg/ingest/libero.hpp"
#include "vbpg/ingest/parse.hpp"
#include "vbpg/pipeline/pipeline.hpp"
#include "vbpg/synth/generator.hpp"

namespace vbpg::testing {

inline std::string data_path(const std::string& name) { return std::string(VBPG_TEST_DATA) + "/" + name; }

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline PointLog sample_rally() {
  ingest::Schema schema;
  auto parsed = ingest::parse_contact_file(data_path("sample_rally_contacts.csv"), schema, true);
  auto res = ingest::assemble_points(parsed.headers, parsed.records, {}, {}, true);
  return res.points.at(0);
}

/// Hand-built rally; possession indices follow team changes.
class Rally {
 public:
  Rally(TeamId serving, TeamId receiving) {
    p_.match_id = "M";
    p_.serving_team = std::move(serving);
    p_.receiving_team = std::move(receiving);
    p_.serving_conference = "C1";
    p_.receiving_conference = "C2";
  }

  Rally& touch(const TeamId& team, const PlayerId& player, SkillType skill, EvalCode eval,
               std::string code = "", int zone = 0) {
    ContactRecord c;
    c.match_id = p_.match_id;
    c.player = player;
    c.team = team;
    c.conference = team == p_.serving_team ? p_.serving_conference : p_.receiving_conference;
    c.skill = skill;
    c.eval = eval;
    if (!code.empty()) c.attack_code = code;
    if (zone) c.end_zone = CourtZone(zone);
    if (p_.contacts.empty()) c.possession_index = 1;
    else c.possession_index = p_.contacts.back().possession_index + (p_.contacts.back().team != team ? 1 : 0);
    c.source_row = p_.contacts.size() + 2;
    p_.contacts.push_back(std::move(c));
    return *this;
  }

  PointLog won_by(const TeamId& winner) {
    p_.winner = winner;
    return p_;
  }

 private:
  PointLog p_;
};

/// A small synthetic season run through every stage, built once per binary.
struct Corpus {
  synth::SyntheticSeason season;
  pipeline::IngestOutput ingest;
  pipeline::PwpOutput pwp;
  pipeline::Datasets data;
  pipeline::SosFits fits;
  std::vector<attribution::PointsGainedEntry> entries;
};

inline synth::SyntheticConfig small_config(std::uint64_t seed = 7) {
  synth::SyntheticConfig c;
  c.matches = 120;
  c.seed = seed;
  return c;
}

inline const Corpus& corpus() {
  static const Corpus c = [] {
    Corpus x;
    x.season = synth::generate_season(small_config(), 4);
    x.ingest = pipeline::ingest_records(x.season.headers, x.season.records, x.season.lineups);
    x.pwp = pipeline::fit_pwp(x.ingest.points);
    x.data = pipeline::build_datasets(x.ingest.points, x.pwp.table, 4);
    x.fits = pipeline::fit_sos(x.data, 4);
    x.entries = pipeline::attribute(x.data, x.fits, 4);
    return x;
  }();
  return c;
}

}  // namespace vbpg::testing
