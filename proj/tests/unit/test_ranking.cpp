#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "crashlens/error.hpp"
#include "crashlens/ranking.hpp"
#include "support/oracles.hpp"
#include "support/partition_fixture.hpp"
#include "support/records.hpp"

using namespace crashlens;
using crashlens::testing::Record;
using crashlens::testing::corpus_of;
using crashlens::testing::trace_text;

namespace {

AppConfig config() {
  AppConfig c;
  c.app_package_prefixes = {"s.p"};
  return c;
}

using Fixture = crashlens::testing::PartitionFixture;

std::string t(std::initializer_list<const char*> frames) {
  return trace_text(std::vector<std::string>(frames.begin(), frames.end()));
}

}  // namespace

TEST(FileFrequency, AllTracesIsOne) {
  std::vector<std::string> ts;
  for (int i = 0; i < 10; ++i) ts.push_back(trace_text({"s.p.A.m(A.java:" + std::to_string(i) + ")"}));
  Fixture f({ts});
  EXPECT_DOUBLE_EQ(file_frequency("s.p.A", f.group(0), f.corpus), 1.0);
}

TEST(FileFrequency, ThreeOfFour) {
  Fixture f({{t({"s.p.A.m(A.java:1)"}), t({"s.p.A.m(A.java:2)"}), t({"s.p.A.m(A.java:3)"}),
              t({"s.p.B.m(B.java:1)"})}});
  EXPECT_DOUBLE_EQ(file_frequency("s.p.A", f.group(0), f.corpus), 0.75);
}

TEST(FileFrequency, MultiplicityIgnored) {
  Fixture f({{t({"s.p.A.m(A.java:1)", "s.p.A.n(A.java:2)"}), t({"s.p.B.m(B.java:1)"})}});
  EXPECT_DOUBLE_EQ(file_frequency("s.p.A", f.group(0), f.corpus), 0.5);
}

TEST(InverseBucketFrequency, FormulaValues) {
  // Ten groups, s.p.Rare in one of them, s.p.Every in all.
  std::vector<std::vector<std::string>> groups;
  for (int g = 0; g < 10; ++g) {
    std::vector<std::string> frames = {"s.p.Every.m(Every.java:1)"};
    if (g == 0) frames.push_back("s.p.Rare.m(Rare.java:1)");
    groups.push_back({trace_text(frames)});
  }
  Fixture f(groups);
  EXPECT_DOUBLE_EQ(inverse_bucket_frequency("s.p.Rare", f.partition, f.corpus), std::log(11.0));
  EXPECT_DOUBLE_EQ(inverse_bucket_frequency("s.p.Every", f.partition, f.corpus), std::log(2.0));
  EXPECT_NEAR(std::log(11.0), 2.3979, 5e-5);
  EXPECT_THROW(inverse_bucket_frequency("s.p.Nowhere", f.partition, f.corpus), FileUnseen);
}

TEST(InverseBucketFrequency, FiveOfTwenty) {
  std::vector<std::vector<std::string>> groups;
  for (int g = 0; g < 20; ++g) {
    std::vector<std::string> frames = {"s.p.G" + std::to_string(g) + ".m(G.java:1)"};
    if (g % 4 == 0) frames.push_back("s.p.Shared.m(Shared.java:1)");
    groups.push_back({trace_text(frames)});
  }
  Fixture f(groups);
  EXPECT_DOUBLE_EQ(inverse_bucket_frequency("s.p.Shared", f.partition, f.corpus), std::log(5.0));
}

TEST(InverseAvgDistance, HandValues) {
  Fixture crash_point({{t({"s.p.A.m(A.java:1)", "x.Y.z(Y.java:1)"}), t({"s.p.A.n(A.java:4)"})}});
  EXPECT_DOUBLE_EQ(inverse_avg_distance("s.p.A", crash_point.group(0), crash_point.corpus), 1.0);

  Fixture min_pos({{t({"s.p.A.m(A.java:1)", "x.Y.z(Y.java:1)", "s.p.A.n(A.java:2)"})}});
  EXPECT_DOUBLE_EQ(inverse_avg_distance("s.p.A", min_pos.group(0), min_pos.corpus), 1.0);

  Fixture mean({{t({"x.Y.z(Y.java:1)", "s.p.A.m(A.java:1)"}),
                 t({"x.Y.z(Y.java:1)", "x.Y.w(Y.java:2)", "x.Y.v(Y.java:3)", "s.p.A.m(A.java:1)"})}});
  EXPECT_DOUBLE_EQ(inverse_avg_distance("s.p.A", mean.group(0), mean.corpus), 1.0 / 3.0);
  EXPECT_THROW(inverse_avg_distance("s.p.Q", mean.group(0), mean.corpus), FileUnseen);
}

TEST(RankFiles, LoneCrashPointFileScoresIbf) {
  Fixture f({{t({"s.p.A.m(A.java:1)", "org.lib.X.y(X.java:3)"}), t({"s.p.A.m(A.java:2)"})},
             {t({"s.p.B.m(B.java:1)"})}});
  auto r = rank_files(f.group(0), f.partition, f.corpus, config());
  ASSERT_EQ(r.entries.size(), 1u);
  EXPECT_EQ(r.candidates_considered, 1u);
  EXPECT_EQ(r.entries[0].file, "s.p.A");
  EXPECT_DOUBLE_EQ(r.entries[0].ff, 1.0);
  EXPECT_DOUBLE_EQ(r.entries[0].iad, 1.0);
  EXPECT_DOUBLE_EQ(r.entries[0].score, 1.0 * std::log(1.0 + 2.0 / 1.0) * 1.0);
}

TEST(RankFiles, NonSourceFramesAndLibrariesAreNotCandidates) {
  Fixture f({{t({"org.lib.X.y(X.java:3)", "s.p.Gen$Proxy.m(Unknown Source)"})}});
  EXPECT_THROW(rank_files(f.group(0), f.partition, f.corpus, config()), NoCandidates);
}

TEST(RankFiles, ThreeGroupFixtureMatchesOracle) {
  Fixture f({{t({"s.p.A.m(A.java:1)", "s.p.B.m(B.java:1)", "s.p.C.m(C.java:1)"}),
              t({"s.p.B.m(B.java:1)", "s.p.A.m(A.java:1)"}),
              t({"org.x.L.l(L.java:1)", "s.p.C.m(C.java:1)", "s.p.D.m(D.java:1)"})},
             {t({"s.p.B.k(B.java:7)", "s.p.E.m(E.java:1)"})},
             {t({"s.p.C.z(C.java:2)", "s.p.A.q(A.java:3)"})}});
  auto cfg = config();
  for (std::size_t g = 0; g < f.partition.groups.size(); ++g) {
    auto got = rank_files(f.group(g), f.partition, f.corpus, cfg);
    auto want = crashlens::testing::oracle_rank(f.group(g), f.partition, f.corpus, cfg);
    ASSERT_EQ(got.entries.size(), want.size());
    for (std::size_t i = 0; i < want.size(); ++i) {
      EXPECT_EQ(got.entries[i].file, want[i].file);
      EXPECT_NEAR(got.entries[i].score, want[i].score, 1e-12);
    }
  }
}

TEST(RankFiles, TruncatesToTopN) {
  std::vector<std::string> frames;
  for (int i = 0; i < 8; ++i) frames.push_back("s.p.F" + std::to_string(i) + ".m(F.java:1)");
  Fixture f({{trace_text(frames)}});
  auto cfg = config();
  cfg.top_n_files = 3;
  auto r = rank_files(f.group(0), f.partition, f.corpus, cfg);
  EXPECT_EQ(r.entries.size(), 3u);
  EXPECT_EQ(r.candidates_considered, 8u);
  EXPECT_EQ(r.entries[0].file, "s.p.F0");
  for (std::size_t i = 1; i < r.entries.size(); ++i) {
    EXPECT_TRUE(ranks_before(r.entries[i - 1], r.entries[i]));
  }
}

TEST(RankMethods, CountsPerFile) {
  std::vector<std::string> ts;
  for (int i = 0; i < 5; ++i) ts.push_back(t({"s.p.A.methodA(A.java:1)", "x.Y.z(Y.java:2)"}));
  ts.push_back(t({"s.p.A.methodB(A.java:9)"}));
  ts.push_back(t({"x.Y.z(Y.java:2)", "s.p.A.methodB(A.java:9)"}));
  Fixture f({ts});
  auto ranking = rank_files(f.group(0), f.partition, f.corpus, config());
  auto methods = rank_methods(ranking, f.group(0), f.corpus);
  ASSERT_EQ(methods.size(), 1u);
  ASSERT_EQ(methods[0].methods.size(), 2u);
  EXPECT_EQ(methods[0].methods[0], (MethodCount{"methodA", 5, 0}));
  EXPECT_EQ(methods[0].methods[1], (MethodCount{"methodB", 2, 0}));
}

TEST(RankMethods, SingleMethodCountsGroupParticipation) {
  Fixture f({{t({"s.p.A.only(A.java:1)"}), t({"s.p.A.only(A.java:2)"}), t({"s.p.A.only(A.java:3)"})}});
  auto ranking = rank_files(f.group(0), f.partition, f.corpus, config());
  auto methods = rank_methods(ranking, f.group(0), f.corpus);
  ASSERT_EQ(methods[0].methods.size(), 1u);
  EXPECT_EQ(methods[0].methods[0].count, 3u);
}

TEST(Properties, CrashPointDominance) {
  std::mt19937 rng(11);
  auto cfg = config();
  cfg.top_n_files = 50;
  for (int round = 0; round < 20; ++round) {
    std::vector<std::vector<std::string>> groups(3);
    for (std::size_t g = 0; g < groups.size(); ++g) {
      auto traces = 1 + rng() % 6;
      for (std::size_t k = 0; k < traces; ++k) {
        std::vector<std::string> frames;
        if (g == 0) frames.push_back("s.p.Top.crash(Top.java:1)");
        auto depth = 1 + rng() % 6;
        for (std::size_t d = 0; d < depth; ++d) {
          frames.push_back("s.p.F" + std::to_string(rng() % 7) + ".m(F.java:" + std::to_string(d) + ")");
        }
        groups[g].push_back(trace_text(frames));
      }
    }
    Fixture f(groups);
    auto r = rank_files(f.group(0), f.partition, f.corpus, cfg);
    ASSERT_FALSE(r.entries.empty());
    EXPECT_EQ(r.entries[0].file, "s.p.Top");
    for (const auto& e : r.entries) EXPECT_LE(e.score, r.entries[0].score);
  }
}
