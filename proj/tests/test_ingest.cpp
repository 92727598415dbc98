#include <gtest/gtest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "support.hpp"
#include "vbpg/ingest/alignment.hpp"
#include "vbpg/ingest/archive.hpp"
#include "vbpg/ingest/assemble.hpp"
#include "vbpg/ingest/libero.hpp"
#include "vbpg/ingest/parse.hpp"
#include "vbpg/markov/encode.hpp"

using namespace vbpg;
using namespace vbpg::ingest;

namespace {

const std::string kHeader =
    "row_type,match_id,set,point,possession,player,team,conference,skill,eval,attack_code,start_xy,end_zone,"
    "serving_team,receiving_team,winner\n";
const std::string kPointRow = "point,M1,1,1,,,,,,,,,,A,B,B\n";

std::string contact(const std::string& rest) { return "contact,M1,1,1," + rest + ",,,\n"; }

LineupState lineup(int point, const std::vector<std::pair<std::string, std::array<std::string, 6>>>& teams,
                   int setter_slot = 1) {
  LineupState ls;
  ls.match_id = "M1";
  ls.point_index = point;
  for (const auto& [t, slots] : teams) ls.teams.push_back({t, slots, setter_slot});
  return ls;
}

ContactRecord touch(const std::string& player, const std::string& team, int set = 1) {
  ContactRecord c;
  c.match_id = "M1";
  c.set_number = set;
  c.player = player;
  c.team = team;
  c.skill = SkillType::Dig;
  c.eval = EvalCode::Positive;
  return c;
}

}  // namespace

TEST(Parse, SampleRallyServeRow) {
  Schema s;
  auto r = parse_contact_file(vbpg::testing::data_path("sample_rally_contacts.csv"), s);
  EXPECT_TRUE(r.rejections.empty());
  ASSERT_EQ(r.records.size(), 11u);
  const auto& c = r.records[0];
  EXPECT_EQ(c.player, "Anna Deeber");
  EXPECT_EQ(c.team, "Louisville");
  EXPECT_EQ(c.skill, SkillType::Serve);
  EXPECT_EQ(c.eval, EvalCode::Negative);
  ASSERT_TRUE(c.start_xy);
  EXPECT_DOUBLE_EQ(c.start_xy->first, 2.99);
  EXPECT_DOUBLE_EQ(c.start_xy->second, -0.13);
  EXPECT_EQ(r.records[3].attack_code, "X6");
  EXPECT_EQ(r.records[3].end_zone, CourtZone(9));
  EXPECT_FALSE(r.records[0].attack_code);
}

TEST(Parse, EmptyFileWithHeader) {
  auto r = parse_contact_text(kHeader, Schema{});
  EXPECT_TRUE(r.records.empty());
  EXPECT_TRUE(r.rejections.empty());
}

TEST(Parse, UnknownEvalSymbolIsRejectedAtItsRow) {
  auto r = parse_contact_text(kHeader + kPointRow + contact("1,p1,A,C1,Serve,?,,") , Schema{});
  ASSERT_EQ(r.rejections.size(), 1u);
  EXPECT_EQ(r.rejections[0].kind, ErrorKind::BadEvalCode);
  EXPECT_EQ(r.rejections[0].row, 3u);
  EXPECT_TRUE(r.records.empty());
}

TEST(Parse, ExclamationOnlyForReceptionAndDig) {
  auto r = parse_contact_text(kHeader + kPointRow + contact("1,p1,A,C1,Serve,!,,") +
                                  contact("2,p2,B,C2,Reception,!,,"),
                              Schema{});
  ASSERT_EQ(r.rejections.size(), 1u);
  EXPECT_EQ(r.rejections[0].kind, ErrorKind::BadEvalCode);
  EXPECT_EQ(r.records.size(), 1u);
}

TEST(Parse, ZoneOutsideCourt) {
  auto text = kHeader + kPointRow + "contact,M1,1,1,1,p1,A,C1,Attack,#,X5,,10,,,\n";
  auto r = parse_contact_text(text, Schema{});
  ASSERT_EQ(r.rejections.size(), 1u);
  EXPECT_EQ(r.rejections[0].kind, ErrorKind::BadZone);
  EXPECT_THROW(parse_contact_text(text, Schema{}, true), Error);
}

TEST(Parse, ContactWithoutPointHeaderIsOrphan) {
  auto r = parse_contact_text(kHeader + contact("1,p1,A,C1,Serve,#,,"), Schema{});
  ASSERT_EQ(r.rejections.size(), 1u);
  EXPECT_EQ(r.rejections[0].kind, ErrorKind::OrphanContact);
  auto r2 = parse_contact_text(kHeader + kPointRow + "contact,M1,1,2,1,p1,A,C1,Serve,#,,,,,,\n", Schema{});
  ASSERT_EQ(r2.rejections.size(), 1u);
  EXPECT_EQ(r2.rejections[0].kind, ErrorKind::OrphanContact);
}

TEST(Parse, AttackCodeIffAttack) {
  auto r = parse_contact_text(kHeader + kPointRow + contact("1,p1,A,C1,Serve,#,X5,") +
                                  contact("2,p2,B,C2,Attack,#,,"),
                              Schema{});
  EXPECT_EQ(r.rejections.size(), 2u);
}

TEST(Parse, MissingRequiredColumnThrows) {
  try {
    parse_contact_text("row_type,match_id,set,point,player,team,skill\n", Schema{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::MissingColumn);
  }
}

TEST(Parse, SchemaRenamesColumnsAndDelimiter) {
  auto s = Schema::from_json(nlohmann::json::parse(
      R"({"delimiter":"tab","contact_columns":{"skill":"Skill","eval":"Grade","player":"Name"}})"));
  std::string text =
      "row_type\tmatch_id\tset\tpoint\tName\tteam\tSkill\tGrade\tserving_team\treceiving_team\twinner\n"
      "point\tM\t1\t1\t\t\t\t\tA\tB\tA\n"
      "contact\tM\t1\t1\tx\tA\tServe\t#\t\t\t\n";
  auto r = parse_contact_text(text, s);
  ASSERT_EQ(r.records.size(), 1u);
  EXPECT_EQ(r.records[0].player, "x");
  EXPECT_EQ(r.records[0].eval, EvalCode::Perfect);
  EXPECT_EQ(Schema::from_json(s.to_json()).to_json(), s.to_json());
}

TEST(Parse, WriteThenParseRoundTrips) {
  Schema s;
  auto a = parse_contact_file(vbpg::testing::data_path("sample_rally_contacts.csv"), s);
  std::ostringstream out;
  write_contacts(out, a.headers, a.records, s);
  auto b = parse_contact_text(out.str(), s);
  EXPECT_EQ(a.headers, b.headers);
  EXPECT_EQ(a.records, b.records);
  std::ostringstream again;
  write_contacts(again, b.headers, b.records, s);
  EXPECT_EQ(out.str(), again.str());
}

TEST(Parse, LineupRoundTripAndValidation) {
  Schema s;
  std::string text =
      "match_id,set,point,team,slot1,slot2,slot3,slot4,slot5,slot6,setter_slot\n"
      "M1,1,1,A,a1,a2,a3,a4,a5,a6,1\n"
      "M1,1,1,B,b1,b2,b3,b4,b5,b6,4\n"
      "M1,1,2,A,a1,a2,,a4,a5,a6,1\n"
      "M1,1,3,A,a1,a2,a3,a4,a5,a6,7\n";
  auto r = parse_lineup_text(text, s);
  ASSERT_EQ(r.lineups.size(), 1u);
  EXPECT_EQ(r.lineups[0].teams.size(), 2u);
  EXPECT_EQ(r.rejections.size(), 2u);
  for (const auto& rej : r.rejections) EXPECT_EQ(rej.kind, ErrorKind::IncompleteLineup);
  std::ostringstream out;
  write_lineups(out, r.lineups, s);
  auto back = parse_lineup_text(out.str(), s);
  EXPECT_EQ(back.lineups[0].teams, r.lineups[0].teams);
}

TEST(Libero, UniqueOffLineupContributor) {
  std::vector<LineupState> l{lineup(1, {{"A", {"a1", "a2", "a3", "a4", "a5", "a6"}}})};
  std::vector<ContactRecord> c;
  for (int i = 0; i < 40; ++i) c.push_back(touch("L", "A"));
  c.push_back(touch("a3", "A"));
  auto r = infer_libero(c, l);
  EXPECT_EQ(r.at({"M1", 1, "A"}), "L");
}

TEST(Libero, NoneWhenEveryoneIsInTheLineup) {
  std::vector<LineupState> l{lineup(1, {{"A", {"a1", "a2", "a3", "a4", "a5", "a6"}}})};
  auto r = infer_libero({touch("a1", "A"), touch("a2", "A")}, l);
  EXPECT_FALSE(r.at({"M1", 1, "A"}).has_value());
}

TEST(Libero, TwoCandidatesAreAmbiguous) {
  std::vector<LineupState> l{lineup(1, {{"A", {"a1", "a2", "a3", "a4", "a5", "a6"}}})};
  std::vector<ContactRecord> c{touch("L1", "A"), touch("L2", "A"), touch("a1", "A")};
  try {
    infer_libero(c, l);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::AmbiguousLibero);
    EXPECT_NE(e.detail().find("candidates=2"), std::string::npos);
    EXPECT_NE(e.detail().find("L1"), std::string::npos);
  }
  auto soft = infer_liberos(c, l);
  ASSERT_EQ(soft.ambiguous.size(), 1u);
  EXPECT_EQ(soft.ambiguous[0].candidates, (std::vector<PlayerId>{"L1", "L2"}));
}

TEST(Libero, IndependentOfContactOrderAndIdempotent) {
  std::vector<LineupState> l{lineup(1, {{"A", {"a1", "a2", "a3", "a4", "a5", "a6"}},
                                        {"B", {"b1", "b2", "b3", "b4", "b5", "b6"}}})};
  std::vector<ContactRecord> c{touch("L", "A"), touch("a1", "A"), touch("M", "B"), touch("b2", "B"),
                               touch("L", "A", 2), touch("b1", "B", 2)};
  auto a = infer_liberos(c, l);
  std::mt19937 rng(3);
  for (int i = 0; i < 10; ++i) {
    std::shuffle(c.begin(), c.end(), rng);
    auto b = infer_liberos(c, l);
    EXPECT_EQ(a.liberos, b.liberos);
  }
  EXPECT_EQ(a.liberos, infer_liberos(c, l).liberos);
}

TEST(Alignment, SetterBackRowWithLibero) {
  TeamLineup t{"A", {"S", "OH1", "MB1", "OPP", "OH2", "MB2"}, 1};
  auto a = resolve_defensive_positions(t, "L");
  EXPECT_EQ(a.at(Position::BR), "S");
  EXPECT_EQ(a.at(Position::FR), "OPP");
  EXPECT_EQ(a.at(Position::FM), "MB1");
  EXPECT_EQ(a.at(Position::FL), "OH1");
  EXPECT_EQ(a.at(Position::BL), "L");
  EXPECT_EQ(a.at(Position::BM), "OH2");
}

TEST(Alignment, SetterFrontRowSwapsWithOpposite) {
  // setter in slot 4 (front left): OPP is in slot 1, back row
  TeamLineup t{"A", {"OPP", "OH2", "MB2", "S", "OH1", "MB1"}, 4};
  auto a = resolve_defensive_positions(t, std::nullopt);
  EXPECT_EQ(a.at(Position::FR), "S");
  EXPECT_EQ(a.at(Position::BR), "OPP");
  EXPECT_EQ(a.at(Position::FL), "OH2");
  EXPECT_EQ(a.at(Position::FM), "MB2");
  EXPECT_EQ(a.at(Position::BL), "MB1");
  EXPECT_EQ(a.at(Position::BM), "OH1");
}

TEST(Alignment, EveryRotationAssignsAllSixPlayers) {
  for (int s = 1; s <= 6; ++s) {
    TeamLineup t{"A", {"p1", "p2", "p3", "p4", "p5", "p6"}, s};
    auto a = resolve_defensive_positions(t, std::nullopt);
    auto v = std::vector<PlayerId>(a.players.begin(), a.players.end());
    std::sort(v.begin(), v.end());
    EXPECT_EQ(v, (std::vector<PlayerId>{"p1", "p2", "p3", "p4", "p5", "p6"})) << s;
    EXPECT_EQ(a.at(setter_row(t) == Row::Front ? Position::FR : Position::BR), t.at(s));
  }
}

TEST(Alignment, UnfilledSlot) {
  TeamLineup t{"A", {"S", "", "MB1", "OPP", "OH2", "MB2"}, 1};
  EXPECT_THROW(resolve_defensive_positions(t, std::nullopt), Error);
}

TEST(Assemble, SampleRallyWinnerIsLouisville) {
  auto p = vbpg::testing::sample_rally();
  EXPECT_EQ(p.winner, "Louisville");
  EXPECT_EQ(p.contacts.size(), 11u);
  EXPECT_EQ(p.serving_conference, "ACC");
  EXPECT_EQ(p.receiving_conference, "Big 12");
  EXPECT_FALSE(p.unterminated);
}

TEST(Assemble, ServiceErrorPoint) {
  auto r = parse_contact_text(kHeader + kPointRow + contact("1,p1,A,C1,Serve,=,,"), Schema{});
  auto a = assemble_points(r.headers, r.records, {}, {});
  ASSERT_EQ(a.points.size(), 1u);
  EXPECT_EQ(a.points[0].winner, "B");
}

TEST(Assemble, SameTeamInConsecutivePossessions) {
  auto r = parse_contact_text(kHeader + kPointRow + contact("1,p1,A,C1,Serve,+,,") +
                                  contact("2,p1,A,C1,Set,+,,") + contact("3,p2,B,C2,Dig,=,,"),
                              Schema{});
  auto a = assemble_points(r.headers, r.records, {}, {});
  EXPECT_TRUE(a.points.empty());
  ASSERT_EQ(a.rejections.size(), 1u);
  EXPECT_EQ(a.rejections[0].kind, ErrorKind::NonAlternatingPossession);
}

TEST(Assemble, WinnerContradictingTerminalContact) {
  auto r = parse_contact_text(kHeader + "point,M1,1,1,,,,,,,,,,A,B,A\n" + contact("1,p1,A,C1,Serve,=,,"), Schema{});
  auto a = assemble_points(r.headers, r.records, {}, {});
  ASSERT_EQ(a.rejections.size(), 1u);
  EXPECT_EQ(a.rejections[0].kind, ErrorKind::InconsistentWinner);
  EXPECT_THROW(assemble_points(r.headers, r.records, {}, {}, true), Error);
}

TEST(Assemble, PointsWithoutErrorOrKillAreFlagged) {
  auto r = parse_contact_text(kHeader + kPointRow + contact("1,p1,A,C1,Serve,+,,") + contact("2,p2,B,C2,Reception,#,,"),
                              Schema{});
  auto a = assemble_points(r.headers, r.records, {}, {});
  ASSERT_EQ(a.points.size(), 1u);
  EXPECT_TRUE(a.points[0].unterminated);
  EXPECT_EQ(a.unterminated, 1u);
}

TEST(Assemble, WinnerMatchesTerminalState) {
  auto p = vbpg::testing::sample_rally();
  auto s = markov::encode_state_sequence(p);
  EXPECT_EQ(s.back().side == markov::Side::S, p.winner == p.serving_team);
}

TEST(Archive, RoundTrip) {
  auto p = vbpg::testing::sample_rally();
  p.lineups.push_back({"Texas", {"t1", "t2", "t3", "t4", "t5", "t6"}, 3});
  p.liberos.emplace_back("Texas", "L");
  std::stringstream ss;
  write_archive(ss, {p, p});
  auto back = read_archive(ss);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].contacts, p.contacts);
  EXPECT_EQ(back[0].lineups, p.lineups);
  EXPECT_EQ(back[0].libero_of("Texas"), "L");
  EXPECT_EQ(to_json(back[1]).dump(), to_json(p).dump());
}
