#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <json.hpp>

#include "support.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using vbpg::testing::slurp;

namespace {

const fs::path& root() {
  static const fs::path r = [] {
    auto d = fs::temp_directory_path() / "vbpg_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return r;
}

struct Run {
  int code = -1;
  std::string err;
};

Run vbpg_run(const std::string& args) {
  const auto err = root() / "stderr.txt";
  const std::string cmd = std::string(VBPG_CLI) + " " + args + " >/dev/null 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(err.string())};
}

json manifest(const fs::path& dir) { return json::parse(slurp((dir / "manifest.json").string())); }

std::string p(const std::string& name) { return (root() / name).string(); }

/// Runs the whole chain once for every test in this binary.
void chain() {
  static bool done = [] {
    fs::create_directories(root());
    { std::ofstream(root() / "cfg.json") << R"({"matches": 40})"; }
    EXPECT_EQ(vbpg_run("--seed 3 --threads 2 simulate --config " + p("cfg.json") + " --out " + p("sim")).code, 0);
    EXPECT_EQ(vbpg_run("ingest --contacts " + p("sim/contacts.csv") + " --lineups " + p("sim/lineups.csv") +
                       " --schema " + p("sim/schema.json") + " --out " + p("ing"))
                  .code,
              0);
    EXPECT_EQ(vbpg_run("fit-pwp --points " + p("ing") + " --out " + p("pwp")).code, 0);
    EXPECT_EQ(vbpg_run("--threads 4 fit-sos --points " + p("ing") + " --pwp " + p("pwp") + " --out " + p("sos")).code,
              0);
    EXPECT_EQ(vbpg_run("--threads 4 attribute --points " + p("ing") + " --pwp " + p("pwp") + " --sos " + p("sos") +
                       " --out " + p("att"))
                  .code,
              0);
    EXPECT_EQ(vbpg_run("report --ledger " + p("att") + " --points " + p("ing") + " --level conference --out " +
                       p("rep"))
                  .code,
              0);
    return true;
  }();
  (void)done;
}

}  // namespace

TEST(Cli, EveryStageWritesOneVerifiedManifest) {
  chain();
  for (const char* d : {"sim", "ing", "pwp", "sos", "att", "rep"}) {
    ASSERT_TRUE(fs::exists(root() / d / "manifest.json")) << d;
    std::vector<std::string> bad;
    EXPECT_TRUE(vbpg::pipeline::verify_manifest(root() / d, &bad)) << d;
    const auto m = manifest(root() / d);
    EXPECT_EQ(m.at("tool_version"), std::string(vbpg::pipeline::kToolVersion));
    EXPECT_FALSE(m.at("outputs").empty()) << d;
  }
  EXPECT_EQ(manifest(root() / "sim").at("seed"), 3);
}

TEST(Cli, ManifestChainLinksStages) {
  chain();
  auto out_digest = [](const char* dir, const char* file) {
    return manifest(root() / dir).at("outputs").at(file).get<std::string>();
  };
  auto in_digest = [](const char* dir, const fs::path& file) {
    return manifest(root() / dir).at("inputs").at(file.string()).get<std::string>();
  };
  EXPECT_EQ(in_digest("ing", root() / "sim/contacts.csv"), out_digest("sim", "contacts.csv"));
  EXPECT_EQ(in_digest("pwp", root() / "ing/points.jsonl"), out_digest("ing", "points.jsonl"));
  EXPECT_EQ(in_digest("sos", root() / "pwp/pwp.json"), out_digest("pwp", "pwp.json"));
  EXPECT_EQ(in_digest("att", root() / "sos/fits.json"), out_digest("sos", "fits.json"));
  EXPECT_EQ(in_digest("rep", root() / "att/ledger.csv"), out_digest("att", "ledger.csv"));
}

TEST(Cli, RerunReproducesDigests) {
  chain();
  ASSERT_EQ(vbpg_run("fit-pwp --points " + p("ing") + " --out " + p("pwp2")).code, 0);
  EXPECT_EQ(manifest(root() / "pwp").at("outputs"), manifest(root() / "pwp2").at("outputs"));
  ASSERT_EQ(vbpg_run("--threads 1 attribute --points " + p("ing") + " --pwp " + p("pwp") + " --sos " + p("sos") +
                     " --out " + p("att1"))
                .code,
            0);
  EXPECT_EQ(manifest(root() / "att").at("outputs").at("ledger.csv"),
            manifest(root() / "att1").at("outputs").at("ledger.csv"));
}

TEST(Cli, ConferenceReportHasMeanSos) {
  chain();
  const auto t = slurp(p("rep/conference_sos.csv"));
  EXPECT_EQ(t.rfind("Conference,Avg SoS\n", 0), 0u);
  EXPECT_NE(t.find("Conf1"), std::string::npos);
  const auto agg = slurp(p("rep/aggregate_conference.csv"));
  EXPECT_NE(agg.find(",sos,"), std::string::npos);
  EXPECT_TRUE(fs::exists(root() / "rep/histograms.csv"));
  EXPECT_TRUE(fs::exists(root() / "rep/pythagorean.json"));
}

TEST(Cli, PlayerTableShape) {
  chain();
  ASSERT_EQ(vbpg_run("report --ledger " + p("att/ledger.csv") + " --points " + p("ing/points.jsonl") +
                     " --top 5 --out " + p("rep_player"))
                .code,
            0);
  const auto t = slurp(p("rep_player/table_player.csv"));
  EXPECT_EQ(t.rfind("PLAYER,TEAM,CONF,POS,SETS,PG*/S,SRV,PASS,SET,ATT,BLK\n", 0), 0u);
  EXPECT_EQ(std::count(t.begin(), t.end(), '\n'), 6);
}

TEST(Cli, MissingInputExitsOneNamingPath) {
  const auto r = vbpg_run("fit-pwp --points /no/such/points.jsonl --out " + p("x"));
  EXPECT_EQ(r.code, 1);
  const auto j = json::parse(r.err);
  EXPECT_EQ(j.at("error"), "MissingInput");
  EXPECT_EQ(j.at("path"), "/no/such/points.jsonl");
}

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(vbpg_run("fit-pwp").code, 1);
  EXPECT_EQ(vbpg_run("frobnicate").code, 1);
  chain();
  const auto r = vbpg_run("report --ledger " + p("att") + " --points " + p("ing") + " --level galaxy --out " + p("y"));
  EXPECT_EQ(r.code, 1);
  EXPECT_EQ(json::parse(r.err).at("error"), "Usage");
}

TEST(Cli, ValidationErrorsExitTwo) {
  chain();
  std::string contacts = slurp(p("sim/contacts.csv"));
  const auto line = contacts.find('\n', contacts.find('\n') + 1);
  contacts.insert(line + 1, "garbage,row\n");
  { std::ofstream(root() / "bad.csv") << contacts; }
  const auto r = vbpg_run("--strict ingest --contacts " + p("bad.csv") + " --schema " + p("sim/schema.json") +
                          " --out " + p("bad"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NO_THROW(json::parse(r.err));
  { std::ofstream(root() / "bad.json") << "{not json"; }
  EXPECT_EQ(vbpg_run("simulate --config " + p("bad.json") + " --out " + p("z")).code, 2);
  { std::ofstream(root() / "neg.json") << R"({"matches": 0})"; }
  EXPECT_EQ(vbpg_run("simulate --config " + p("neg.json") + " --out " + p("z")).code, 2);
}
