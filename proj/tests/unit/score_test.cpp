#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "collage/errors.hpp"
#include "collage/mock_backend.hpp"
#include "collage/oracle.hpp"
#include "collage/score.hpp"
#include "support.hpp"

using namespace collage;

namespace {

Embedding unit(std::mt19937& rng, int dim) {
  std::normal_distribution<double> n(0, 1);
  Embedding v(dim);
  double s = 0;
  for (auto& x : v) {
    x = n(rng);
    s += x * x;
  }
  for (auto& x : v) x /= std::sqrt(s);
  return v;
}

// Straight from the definition, written without the library's helpers.
double diversity_oracle(const std::vector<Embedding>& c, std::size_t i) {
  if (c.size() == 1) return 0;
  double total = 0;
  for (std::size_t j = 0; j < c.size(); ++j) {
    if (j == i) continue;
    double ab = 0, aa = 0, bb = 0, dd = 0;
    for (std::size_t k = 0; k < c[i].size(); ++k) {
      ab += c[i][k] * c[j][k];
      aa += c[i][k] * c[i][k];
      bb += c[j][k] * c[j][k];
      dd += (c[i][k] - c[j][k]) * (c[i][k] - c[j][k]);
    }
    const double ncos = (ab / std::sqrt(aa * bb) + 1) / 2;
    total += (1 - ncos + std::sqrt(dd)) / 2;
  }
  return total / (c.size() - 1);
}

}  // namespace

TEST(Diversity, SingletonIsZero) {
  EXPECT_EQ(score_diversity({{1, 0, 0}}, 0), 0.0);
}

TEST(Diversity, IdenticalPairIsZero) {
  EXPECT_NEAR(score_diversity({{0, 1, 0}, {0, 1, 0}}, 0), 0.0, 1e-15);
}

TEST(Diversity, OrthogonalPair) {
  // cos 0 -> ncos 0.5, distance sqrt(2): (1 - 0.5 + 1.41421356) / 2
  EXPECT_NEAR(score_diversity({{1, 0}, {0, 1}}, 0), 0.95711, 1e-5);
  EXPECT_NEAR(score_diversity({{1, 0}, {0, 1}}, 0), (0.5 + std::sqrt(2.0)) / 2, 1e-15);
}

TEST(Diversity, AntipodalPairIsTheMaximum) {
  EXPECT_NEAR(score_diversity({{1, 0}, {-1, 0}}, 1), 1.5, 1e-15);
}

TEST(Diversity, DimensionMismatchIsAScoringError) {
  EXPECT_THROW(score_diversity({{1, 0}, {1, 0, 0}}, 0), ScoringError);
}

TEST(Diversity, MatchesOracleAndStaysInRange) {
  std::mt19937 rng(3);
  for (int t = 0; t < 300; ++t) {
    std::vector<Embedding> c(1 + rng() % 10);
    for (auto& e : c) e = unit(rng, 8);
    for (std::size_t i = 0; i < c.size(); ++i) {
      const double s = score_diversity(c, i);
      ASSERT_NEAR(s, diversity_oracle(c, i), 1e-12);
      ASSERT_GE(s, 0.0);
      ASSERT_LE(s, 1.5 + 1e-12);
    }
  }
}

TEST(Diversity, InvariantUnderReordering) {
  std::mt19937 rng(5);
  std::vector<Embedding> c(7);
  for (auto& e : c) e = unit(rng, 8);
  const double before = score_diversity(c, 2);
  const Embedding target = c[2];
  std::shuffle(c.begin(), c.end(), rng);
  const auto pos = std::find(c.begin(), c.end(), target) - c.begin();
  EXPECT_NEAR(score_diversity(c, pos), before, 1e-12);
}

TEST(Consistency, IdenticalIsOneAntipodalIsZero) {
  EXPECT_NEAR(score_consistency({0.6, 0.8}, {0.6, 0.8}), 1.0, 1e-15);
  EXPECT_NEAR(score_consistency({0.6, 0.8}, {-0.6, -0.8}), 0.0, 1e-15);
}

TEST(Consistency, MockElementUnderItsOwnLabelNameScoresHigh) {
  MockBackend mock(7);
  const auto& lib = support::fixture_library();
  const auto name = mock.embed_text("cat").vector;
  for (const auto& id : lib.label_index.at("cat"))
    EXPECT_GE(score_consistency(name, lib.elements.at(id).visual_embedding), 0.9);
}

TEST(Resolution, MinMaxAndEqualBranch) {
  EXPECT_DOUBLE_EQ(score_resolution(200, 100, 300), 0.5);
  EXPECT_DOUBLE_EQ(score_resolution(100, 100, 300), 0.0);
  EXPECT_DOUBLE_EQ(score_resolution(300, 100, 300), 1.0);
  EXPECT_DOUBLE_EQ(score_resolution(42, 42, 42), 1.0);
}

TEST(Resolution, ScaleInvariant) {
  for (std::int64_t c : {2, 7, 1000})
    EXPECT_DOUBLE_EQ(score_resolution(170 * c, 100 * c, 300 * c), score_resolution(170, 100, 300));
}

TEST(Combine, DefaultWeights) {
  const ScoringConfig cfg;
  EXPECT_NEAR(combine_score(0.6, 0.9, 0.3, cfg), 0.5994, 1e-12);
  EXPECT_NEAR(combine_score(0.6, 0.9, 0.3, cfg), 0.333 * (0.6 + 0.9 + 0.3), 1e-15);
  EXPECT_EQ(combine_score(0, 0, 0, cfg), 0.0);
}

TEST(Combine, ProjectionWeights) {
  ScoringConfig cfg;
  cfg.w_div = 1;
  cfg.w_cns = 0;
  cfg.w_res = 0;
  EXPECT_EQ(combine_score(0.73, 0.2, 0.9, cfg), 0.73);
}

TEST(Combine, NegativeWeightIsRejected) {
  ScoringConfig cfg;
  cfg.w_res = -0.1;
  EXPECT_THROW(combine_score(0.1, 0.1, 0.1, cfg), PreconditionError);
}

TEST(Height, BaseAndSlope) {
  const ScoringConfig cfg;
  EXPECT_EQ(compute_height(0, CategoryRole::accessories, cfg), 100.0);
  EXPECT_EQ(compute_height(0.5, CategoryRole::backgrounds, cfg), 160.0);
  EXPECT_EQ(compute_height(0.5, CategoryRole::characters, cfg), 240.0);
  for (double s : {0.0, 0.3, 1.2})
    EXPECT_GT(compute_height(s, CategoryRole::characters, cfg), compute_height(s, CategoryRole::accessories, cfg));
}

TEST(Height, StrictlyIncreasingInScore) {
  const ScoringConfig cfg;
  double prev = -1;
  for (double s = 0; s <= 1.5; s += 0.01) {
    const double h = compute_height(s, CategoryRole::accessories, cfg);
    EXPECT_GT(h, prev);
    prev = h;
  }
}

TEST(Dedup, EqualScoresKeepSmallestId) {
  std::map<ElementId, ScoreRecord> scores;
  scores["c"].s_total = 0.5;
  scores["a"].s_total = 0.5;
  scores["b"].s_total = 0.5;
  scores["d"].s_total = 0.7;
  EXPECT_EQ(dedup_by_score({"c", "a", "d", "b"}, scores), (std::vector<ElementId>{"b", "c"}));
}

TEST(Dedup, DistinctScoresUnchanged) {
  std::map<ElementId, ScoreRecord> scores;
  scores["a"].s_total = 0.1;
  scores["b"].s_total = 0.2;
  scores["c"].s_total = 0.1 + 1e-9;
  EXPECT_TRUE(dedup_by_score({"a", "b", "c"}, scores).empty());
}

TEST(Dedup, ToleranceIsOneEMinusTwelve) {
  std::map<ElementId, ScoreRecord> scores;
  scores["a"].s_total = 0.25;
  scores["b"].s_total = 0.25 + 5e-13;
  EXPECT_EQ(dedup_by_score({"a", "b"}, scores), (std::vector<ElementId>{"b"}));
}

TEST(ScoreHierarchy, PixelIdenticalCutoutsAreDeduplicated) {
  // The fixture draws two identical balls; only one survives.
  const auto& lib = support::fixture_library();
  const auto balls = lib.label_index.at("ball");
  ASSERT_EQ(balls.size(), 2u);
  AssetHierarchy h;
  h.categories = {{"characters", {}, {}}, {"backgrounds", {}, {}}, {"accessories", {{"ball", {}, balls}}, {}}};
  MockBackend mock(7);
  score_hierarchy(h, lib, CategoryVocabulary{}, ScoringConfig{}, mock);
  const auto smallest = std::min(balls[0], balls[1]);
  const auto other = std::max(balls[0], balls[1]);
  EXPECT_EQ(h.suppressed, std::vector<ElementId>{other});
  EXPECT_EQ(h.scores.at(smallest).s_total, h.scores.at(other).s_total);
  EXPECT_TRUE(oracle_check(h, lib, CategoryVocabulary{}, ScoringConfig{}, mock).empty());
}

TEST(ScoreHierarchy, BackendFailureIsAScoringError) {
  support::ScriptedLlm backend([](int, const std::string&, const std::string&) { return "{}"; });
  AssetHierarchy h;
  const auto& lib = support::fixture_library();
  // Cluster name that the mock rejects: empty text.
  h.categories = {{"characters", {{"", {}, {lib.label_index.at("boy").front()}}}, {}},
                  {"backgrounds", {}, {}},
                  {"accessories", {}, {}}};
  EXPECT_THROW(score_hierarchy(h, lib, CategoryVocabulary{}, ScoringConfig{}, backend), ScoringError);
}

TEST(ScoreHierarchy, ArgmaxByScoreEqualsArgmaxByHeight) {
  const auto& lib = support::fixture_library();
  AssetHierarchy h;
  h.categories = {{"characters", {{"boy", {}, lib.label_index.at("boy")}}, {}},
                  {"backgrounds", {}, {}},
                  {"accessories", {{"cloud", {}, lib.label_index.at("cloud")}, {"tree", {}, lib.label_index.at("tree")}}, {}}};
  MockBackend mock(7);
  score_hierarchy(h, lib, CategoryVocabulary{}, ScoringConfig{}, mock);
  for (const auto* ids : {&lib.label_index.at("cloud"), &lib.label_index.at("boy")}) {
    auto by = [&](auto field) {
      return *std::max_element(ids->begin(), ids->end(),
                               [&](auto& a, auto& b) { return h.scores.at(a).*field < h.scores.at(b).*field; });
    };
    EXPECT_EQ(by(&ScoreRecord::s_total), by(&ScoreRecord::height));
  }
}
