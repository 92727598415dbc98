#include <gtest/gtest.h>

#include <chrono>
#include <cmath>
#include <random>

#include "support.hpp"
#include "vbpg/markov/absorb.hpp"
#include "vbpg/markov/baseline.hpp"
#include "vbpg/markov/encode.hpp"
#include "vbpg/markov/transition_model.hpp"

using namespace vbpg;
using namespace vbpg::markov;
using vbpg::testing::Rally;

namespace {

const char* kSampleRallySequence =
    "(S, SV) \xE2\x86\x92 (R, R#) \xE2\x86\x92 (R, R#S#) \xE2\x86\x92 (R, R#S#AX6) \xE2\x86\x92 (S, D+) \xE2\x86\x92 "
    "(S, D+S#) \xE2\x86\x92 (S, D+S#AV5) \xE2\x86\x92 (R, B+) \xE2\x86\x92 (S, D!) \xE2\x86\x92 (S, D!S#) \xE2\x86\x92 "
    "(S, D!S#AX5) \xE2\x86\x92 (S, W)";

PointStateKey key(const char* s) { return parse_state_key(s); }

PointLog service_error() {
  return Rally("A", "B").touch("A", "a1", SkillType::Serve, EvalCode::Error).won_by("B");
}

PointLog ace() {
  return Rally("A", "B")
      .touch("A", "a1", SkillType::Serve, EvalCode::Perfect)
      .touch("B", "b1", SkillType::Reception, EvalCode::Error)
      .won_by("A");
}

PointLog sideout_kill(const char* code, EvalCode pass) {
  return Rally("A", "B")
      .touch("A", "a1", SkillType::Serve, EvalCode::Ok)
      .touch("B", "b1", SkillType::Reception, pass)
      .touch("B", "b2", SkillType::Set, EvalCode::Perfect)
      .touch("B", "b3", SkillType::Attack, EvalCode::Perfect, code, 5)
      .won_by("B");
}

TransitionCounts counts_of(std::initializer_list<std::pair<std::vector<const char*>, int>> seqs) {
  TransitionCounts tc;
  for (const auto& [names, times] : seqs) {
    std::vector<PointStateKey> s;
    for (const char* n : names) s.push_back(key(n));
    for (int i = 0; i < times; ++i) tc.add_sequence(s);
  }
  return tc;
}

}  // namespace

TEST(Encode, SampleRallyPointMatchesPrintedSequence) {
  const auto t0 = std::chrono::steady_clock::now();
  const PointLog p = vbpg::testing::sample_rally();
  EXPECT_EQ(p.winner, "Louisville");
  EXPECT_EQ(format_sequence(encode_state_sequence(p)), kSampleRallySequence);
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 1.0);
}

TEST(Encode, ServiceErrorGoesStraightToReceiverWin) {
  EXPECT_EQ(format_sequence(encode_state_sequence(service_error())), "(S, SV) \xE2\x86\x92 (R, W)");
}

TEST(Encode, AceKeepsErrorReceptionState) {
  EXPECT_EQ(format_sequence(encode_state_sequence(ace())), "(S, SV) \xE2\x86\x92 (R, R=) \xE2\x86\x92 (S, W)");
}

TEST(Encode, TerminalSideMatchesWinner) {
  for (const PointLog& p : {service_error(), ace(), sideout_kill("X5", EvalCode::Perfect)}) {
    auto s = encode_state_sequence(p);
    ASSERT_TRUE(s.back().terminal);
    EXPECT_EQ(s.back().side == Side::S, p.winner == p.serving_team);
  }
}

TEST(Encode, RejectsServeInsideRally) {
  auto p = Rally("A", "B")
               .touch("A", "a1", SkillType::Serve, EvalCode::Ok)
               .touch("B", "b1", SkillType::Serve, EvalCode::Ok)
               .won_by("A");
  try {
    encode_state_sequence(p);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnencodableContact);
  }
}

TEST(Encode, RejectsSameSideContactAfterAttack) {
  auto p = Rally("A", "B")
               .touch("A", "a1", SkillType::Serve, EvalCode::Ok)
               .touch("B", "b1", SkillType::Reception, EvalCode::Ok)
               .touch("B", "b3", SkillType::Attack, EvalCode::Ok, "X5")
               .touch("B", "b2", SkillType::Set, EvalCode::Ok)
               .won_by("A");
  EXPECT_THROW(encode_state_sequence(p), Error);
}

TEST(StateKey, PrintParseRoundTrip) {
  for (const char* s : {"(S, SV)", "(R, R#S#AX6)", "(S, W)", "(R, B+)", "(S, ~A*)", "(S, D!S#A*)", "(R, R=)"})
    EXPECT_EQ(parse_state_key(s).str(), s);
  EXPECT_THROW(parse_state_key("(Q, SV)"), Error);
  EXPECT_THROW(parse_state_key("(S, R?)"), Error);
}

TEST(StateKey, DistinctKeysPrintDistinctly) {
  EXPECT_NE(key("(R, R#S#AX6)"), key("(R, R#S#AX5)"));
  EXPECT_NE(key("(R, R#S#AX6)").str(), key("(S, R#S#AX6)").str());
  EXPECT_NE(coarsen(key("(R, S#)"), 2), std::optional<PointStateKey>(key("(R, S#)")));
}

TEST(StateKey, CoarsenLadder) {
  auto k = key("(R, R#S#AX6)");
  EXPECT_EQ(coarsen(k, 1)->str(), "(R, R#S#A*)");
  EXPECT_EQ(coarsen(k, 2)->str(), "(R, ~A*)");
  EXPECT_FALSE(coarsen(key("(R, R#)"), 1).has_value());
  EXPECT_FALSE(coarsen(key("(R, R#)"), 2).has_value());
  EXPECT_EQ(coarsen(key("(R, R#S+)"), 2)->str(), "(R, ~S+)");
  EXPECT_FALSE(coarsen(key("(S, W)"), 1).has_value());
}

TEST(Transitions, SampleRallyPointGivesElevenUnitCounts) {
  TransitionCounts tc;
  tc.add_point(vbpg::testing::sample_rally());
  EXPECT_EQ(tc.counts().size(), 11u);
  for (const auto& [k, c] : tc.counts()) EXPECT_EQ(c, 1u);
  auto m = build_transition_model(tc);
  std::uint64_t total = 0;
  for (const auto& t : m.counts) total += std::get<2>(t);
  EXPECT_EQ(total, 11u);
}

TEST(Transitions, EmptyInputGivesOnlyTerminals) {
  auto m = count_transitions({});
  EXPECT_EQ(m.size(), 2u);
  EXPECT_TRUE(m.counts.empty());
  auto t = absorb(m);
  EXPECT_EQ(t.v[m.receiving_won], 1.0);
  EXPECT_EQ(t.v[m.serving_won], 0.0);
}

TEST(Transitions, RowsAreStochasticAndTerminalsAbsorb) {
  std::vector<PointLog> pts;
  for (int i = 0; i < 30; ++i) {
    pts.push_back(service_error());
    pts.push_back(ace());
    pts.push_back(sideout_kill(i % 2 ? "X5" : "X6", i % 3 ? EvalCode::Perfect : EvalCode::Positive));
  }
  pts.push_back(vbpg::testing::sample_rally());
  auto m = count_transitions(pts);
  for (std::uint32_t i = 0; i < m.size(); ++i) {
    EXPECT_NEAR(m.p1.row_sum(i), 1.0, 1e-12) << m.names[i];
    if (m.is_terminal(i)) EXPECT_EQ(m.p1.at(i, i), 1.0);
  }
}

TEST(Transitions, DuplicatedCorpusLeavesKernelBitIdentical) {
  std::vector<PointLog> pts;
  // every row stays above the support threshold in both corpora
  for (int i = 0; i < 80; ++i) {
    pts.push_back(service_error());
    pts.push_back(ace());
    pts.push_back(sideout_kill(i % 2 ? "X5" : "X6", i % 4 < 2 ? EvalCode::Perfect : EvalCode::Positive));
  }
  auto doubled = pts;
  doubled.insert(doubled.end(), pts.begin(), pts.end());
  auto a = count_transitions(pts);
  auto b = count_transitions(doubled);
  ASSERT_EQ(a.names, b.names);
  EXPECT_EQ(a.p1.col, b.p1.col);
  EXPECT_EQ(a.p1.val, b.p1.val);
  EXPECT_EQ(absorb(a).v, absorb(b).v);
  for (std::size_t i = 0; i < a.counts.size(); ++i) EXPECT_EQ(2 * std::get<2>(a.counts[i]), std::get<2>(b.counts[i]));
}

TEST(Transitions, RareStateBorrowsPooledRow) {
  // 25 X5 attacks and 3 X6 attacks after the same pass and set: X6 is rare
  // and must use the pooled generic-code row.
  auto tc = counts_of({
      {{"(R, R#S#AX5)", "(R, W)"}, 15},
      {{"(R, R#S#AX5)", "(S, D+)"}, 10},
      {{"(R, R#S#AX6)", "(R, W)"}, 3},
  });
  auto m = build_transition_model(tc, 20);
  const auto x6 = *m.find("(R, R#S#AX6)");
  const auto x5 = *m.find("(R, R#S#AX5)");
  const auto generic = *m.find("(R, R#S#A*)");
  EXPECT_EQ(m.representative[x5], x5);
  EXPECT_EQ(m.representative[x6], generic);
  EXPECT_EQ(m.backoff_level[x6], 1);
  EXPECT_EQ(m.p1.at(x6, m.receiving_won), 18.0 / 28.0);
  EXPECT_EQ(m.p1.at(x5, m.receiving_won), 15.0 / 25.0);
}

TEST(Transitions, SecondLevelBackoffWhenGenericCodeIsRare) {
  auto tc = counts_of({
      {{"(R, R#S#AX5)", "(R, W)"}, 2},
      {{"(R, R+S#AX6)", "(S, W)"}, 9},
      {{"(R, D#S#AX1)", "(R, W)"}, 9},
  });
  auto m = build_transition_model(tc, 20);
  const auto s = *m.find("(R, R#S#AX5)");
  EXPECT_EQ(m.names[m.representative[s]], "(R, ~A*)");
  EXPECT_EQ(m.backoff_level[s], 2);
  EXPECT_EQ(m.p1.at(s, m.receiving_won), 11.0 / 20.0);
}

TEST(Absorb, OneStepToy) {
  auto tc = counts_of({{{"(S, SV)", "(R, W)"}, 3}, {{"(S, SV)", "(S, W)"}, 7}});
  auto m = build_transition_model(tc, 1);
  auto t = absorb(m, 1);
  EXPECT_EQ(*t.find("(S, SV)"), 0.3);
  EXPECT_EQ(*t.find("(R, W)"), 1.0);
  EXPECT_EQ(*t.find("(S, W)"), 0.0);
}

TEST(Absorb, CyclicToyReachesHalfWithGeometricResidual) {
  auto tc = counts_of({
      {{"(S, D+)", "(S, D+)"}, 8},
      {{"(S, D+)", "(R, W)"}, 1},
      {{"(S, D+)", "(S, W)"}, 1},
  });
  auto m = build_transition_model(tc, 1);
  auto t = absorb(m, 100);
  const auto i = *m.find("(S, D+)");
  EXPECT_NEAR(t.v[i], 0.5, 1e-9);
  EXPECT_LE(t.residual[i], std::pow(0.8, 100) * (1 + 1e-9));
  EXPECT_GT(t.residual[i], 0.0);
}

TEST(Absorb, ResidualIsNonIncreasingInSteps) {
  auto tc = counts_of({
      {{"(S, D+)", "(S, D+)"}, 8},
      {{"(S, D+)", "(R, W)"}, 1},
      {{"(S, D+)", "(S, W)"}, 1},
  });
  auto m = build_transition_model(tc, 1);
  double prev = 1.0;
  for (unsigned n : {1u, 2u, 5u, 10u, 37u, 100u}) {
    auto t = absorb_unchecked(m, n);
    EXPECT_LE(t.max_residual(), prev);
    prev = t.max_residual();
  }
}

TEST(Absorb, NonConvergentReportsStates) {
  auto tc = counts_of({
      {{"(S, D+)", "(S, D+)"}, 98},
      {{"(S, D+)", "(R, W)"}, 1},
      {{"(S, D+)", "(S, W)"}, 1},
  });
  auto m = build_transition_model(tc, 1);
  try {
    absorb(m, 100);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonConvergent);
    EXPECT_NE(e.detail().find("(S, D+)"), std::string::npos);
  }
}

TEST(Absorb, PowerMatchesRepeatedMatvec) {
  std::mt19937_64 rng(7);
  const std::size_t n = 40;
  CsrBuilder b(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    if (i < 2) {
      b.add_row({{i, 1.0}});
      continue;
    }
    std::vector<std::pair<std::uint32_t, double>> e;
    double tot = 0;
    for (int k = 0; k < 5; ++k) {
      double w = std::uniform_real_distribution<>(0.01, 1)(rng);
      e.emplace_back(static_cast<std::uint32_t>(rng() % n), w);
      tot += w;
    }
    for (auto& [j, w] : e) w /= tot;
    b.add_row(e);
  }
  auto p = std::move(b).finish();
  for (unsigned steps : {1u, 3u, 64u, 100u}) {
    auto pn = power(p, steps);
    std::vector<double> x(n, 0.0);
    x[1] = 1.0;
    for (unsigned s = 0; s < steps; ++s) x = multiply(p, x);
    for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(pn.at(i, 1), x[i], 1e-13) << steps << " " << i;
  }
}

TEST(Absorb, WinProbabilityIsComplementary) {
  std::vector<PointLog> pts;
  for (int i = 0; i < 25; ++i) {
    pts.push_back(service_error());
    pts.push_back(ace());
    pts.push_back(ace());
    pts.push_back(sideout_kill("X5", EvalCode::Perfect));
  }
  auto t = absorb(count_transitions(pts));
  for (const auto& s : t.states) {
    EXPECT_DOUBLE_EQ(t.win_prob(s, Side::S) + t.win_prob(s, Side::R), 1.0);
    EXPECT_EQ(t.w(s), t.win_prob(s, s.side));
  }
  EXPECT_NEAR(t.v_of(key("(S, SV)")), 0.5, 1e-12);
  EXPECT_EQ(t.v_of(key("(R, R=)")), 0.0);
  // unseen code backs off to the generic key
  EXPECT_EQ(t.v_of(key("(R, R#S#AQ9)")), t.v_of(key("(R, R#S#AX5)")));
  EXPECT_THROW(t.v_of(key("(S, D/)")), Error);
}

TEST(Baseline, AttackErrorBaselineIsZero) {
  std::vector<AttackContext> a{
      {key("(R, R#S#AX5)"), AttackCategory::AttackError, 0.0},
      {key("(R, R#S#AX5)"), AttackCategory::Clean, 0.8},
      {key("(S, D+S#AV5)"), AttackCategory::AttackError, 0.0},
  };
  for (const auto& [k, v] : conditional_w_baseline(a, TreeNode::AttackError, 1)) EXPECT_EQ(v, 0.0) << k;
}

TEST(Baseline, SingleObservationIsItsOwnMean) {
  std::vector<AttackContext> a{{key("(R, R#S#AX5)"), AttackCategory::Clean, 0.625}};
  auto m = conditional_w_baseline(a, TreeNode::All, 20);
  EXPECT_EQ(m.at("(R, R#S#AX5)"), 0.625);
  auto t = BaselineTable::build(a, 20);
  EXPECT_THROW(t.lookup(key("(S, D+S#AV5)"), TreeNode::All), Error);
}

TEST(Baseline, SplitResponsesCenterWithinPreState) {
  std::mt19937_64 rng(11);
  std::vector<AttackContext> a;
  const std::array cats{AttackCategory::AttackError, AttackCategory::Clean, AttackCategory::BlockError,
                        AttackCategory::BlockThrough, AttackCategory::BlockReturn};
  for (int i = 0; i < 4000; ++i) {
    AttackContext c;
    c.pre = key(i % 2 ? "(R, R#S#AX5)" : "(S, D+S#AV5)");
    c.category = cats[rng() % cats.size()];
    c.w_post = c.category == AttackCategory::AttackError ? 0.0
               : c.category == AttackCategory::BlockError ? 1.0
                                                          : std::uniform_real_distribution<>(0, 1)(rng);
    a.push_back(c);
  }
  auto t = BaselineTable::build(a, 20);
  for (const char* pre : {"(R, R#S#AX5)", "(S, D+S#AV5)"}) {
    std::array<double, 7> sum{};
    for (const auto& c : a) {
      if (c.pre.str() != pre) continue;
      auto r = compute_split_responses(c, t);
      for (std::size_t k = 0; k < 7; ++k) {
        if (r.y[k]) {
          EXPECT_EQ(r.level[k], 0);
          sum[k] += *r.y[k];
        }
      }
    }
    for (std::size_t k = 0; k < 7; ++k) EXPECT_NEAR(sum[k], 0.0, 1e-10) << pre << " y" << k + 1;
  }
}

TEST(Baseline, ReachedSplitsFollowTree) {
  std::vector<AttackContext> a;
  for (auto c : {AttackCategory::AttackError, AttackCategory::Clean, AttackCategory::BlockError,
                 AttackCategory::BlockThrough, AttackCategory::BlockReturn})
    a.push_back({key("(R, R#S#AX5)"), c, c == AttackCategory::AttackError ? 0.0 : 0.5});
  auto t = BaselineTable::build(a, 1);
  auto reached = [&](AttackCategory c) {
    std::string s;
    auto r = compute_split_responses({key("(R, R#S#AX5)"), c, 0.5}, t);
    for (std::size_t k = 0; k < 7; ++k) s += r.y[k] ? '1' : '0';
    return s;
  };
  EXPECT_EQ(reached(AttackCategory::AttackError), "1000000");
  EXPECT_EQ(reached(AttackCategory::Clean), "1100001");
  EXPECT_EQ(reached(AttackCategory::BlockError), "1110000");
  EXPECT_EQ(reached(AttackCategory::BlockThrough), "1111010");
  EXPECT_EQ(reached(AttackCategory::BlockReturn), "1111100");
}
