#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ebm/error.hpp"
#include "ebm/interactions.hpp"
#include "test_util.hpp"

namespace ebm {
namespace {

using testing::continuous_column;

// Every 2x2 cut enumerated cell by cell.
double brute_quadrant_gain(const std::vector<double>& sums, const std::vector<double>& counts, std::size_t rows,
                           std::size_t cols) {
  double total_s = 0.0, total_n = 0.0;
  for (std::size_t k = 0; k < sums.size(); ++k) total_s += sums[k], total_n += counts[k];
  double best = 0.0;
  for (std::size_t r = 1; r < rows; ++r) {
    for (std::size_t c = 1; c < cols; ++c) {
      double s[4] = {0, 0, 0, 0}, n[4] = {0, 0, 0, 0};
      for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
          const int q = (i >= r ? 2 : 0) + (j >= c ? 1 : 0);
          s[q] += sums[i * cols + j];
          n[q] += counts[i * cols + j];
        }
      }
      double gain = -total_s * total_s / total_n;
      for (int q = 0; q < 4; ++q) gain += n[q] > 0 ? s[q] * s[q] / n[q] : 0.0;
      best = std::max(best, gain);
    }
  }
  return best;
}

TEST(QuadrantGainTest, MatchesBruteForce) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t rows = 1 + rng() % 9;
    const std::size_t cols = 1 + rng() % 9;
    std::vector<double> sums(rows * cols), counts(rows * cols);
    for (std::size_t k = 0; k < sums.size(); ++k) {
      counts[k] = static_cast<double>(rng() % 5);
      sums[k] = counts[k] > 0 ? normal(rng) * counts[k] : 0.0;
    }
    if (counts[0] == 0) counts[0] = 1;
    EXPECT_NEAR(best_quadrant_gain(sums, counts, rows, cols), brute_quadrant_gain(sums, counts, rows, cols), 1e-9);
  }
}

TEST(QuadrantGainTest, CheckerboardIsDetected) {
  // residual +1 where both halves agree, -1 otherwise
  const std::vector<double> sums{1, -1, -1, 1};
  const std::vector<double> counts{1, 1, 1, 1};
  EXPECT_DOUBLE_EQ(best_quadrant_gain(sums, counts, 2, 2), 4.0);
  EXPECT_THROW(best_quadrant_gain(sums, counts, 2, 3), ValidationError);
}

Dataset xor_data(std::size_t n, std::size_t p, std::size_t a, std::size_t b, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.1);
  std::vector<std::vector<double>> x(p, std::vector<double>(n));
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < p; ++j) x[j][i] = unit(rng);
    y[i] = 5.0 + x[a][i] * x[b][i] + noise(rng);
  }
  std::vector<Column> cols;
  for (std::size_t j = 0; j < p; ++j) cols.push_back(continuous_column("x" + std::to_string(j), x[j]));
  return testing::make_dataset(std::move(cols), y);
}

TEST(FastRankTest, TruePairRanksFirst) {
  const Dataset data = xor_data(4000, 5, 1, 3, 2);
  EbmModel model = testing::blank_model(data, LossKind::squared_error);
  model.intercept = 5.0;
  const auto ranked = fast_rank(data, model);
  ASSERT_EQ(ranked.size(), 10u);
  EXPECT_EQ(ranked[0].first, 1u);
  EXPECT_EQ(ranked[0].second, 3u);
  for (std::size_t i = 1; i < ranked.size(); ++i) EXPECT_GE(ranked[i - 1].strength, ranked[i].strength);
}

TEST(FastRankTest, NeedsTwoFeatures) {
  const Dataset data = testing::make_dataset({continuous_column("x", {1, 2})}, {1, 2});
  EXPECT_THROW(fast_rank(data, std::vector<double>{0, 0}, 32), ValidationError);
}

FeatureSchema schema_with(std::size_t p) {
  std::vector<SchemaEntry> entries;
  for (std::size_t j = 0; j < p; ++j) entries.push_back({"x" + std::to_string(j), Role::feature, Kind::continuous});
  entries.push_back({"y", Role::target, Kind::continuous});
  return FeatureSchema(entries);
}

std::vector<RankedPair> all_pairs(std::size_t p) {
  std::vector<RankedPair> out;
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = a + 1; b < p; ++b) out.push_back({a, b, 1.0});
  }
  return out;
}

TEST(ResolveTest, FractionOfFeatureCount) {
  const auto ranked = all_pairs(8);
  EXPECT_EQ(resolve_interaction_spec(InteractionSpec::fraction(0.9), schema_with(8), ranked).size(), 7u);
  EXPECT_EQ(resolve_interaction_spec(InteractionSpec::fraction(0.57), schema_with(100), all_pairs(100)).size(), 57u);
  // Never more than the number of distinct pairs.
  EXPECT_EQ(resolve_interaction_spec(InteractionSpec::count(50), schema_with(3), all_pairs(3)).size(), 3u);
  EXPECT_TRUE(resolve_interaction_spec(InteractionSpec::count(0), schema_with(8), ranked).empty());
}

TEST(ResolveTest, ExplicitPairsValidated) {
  const auto schema = schema_with(4);
  const auto pairs =
      resolve_interaction_spec(InteractionSpec::explicit_list({{"x3", "x1"}, {"x1", "x3"}, {"x0", "x2"}}), schema, {});
  EXPECT_EQ(pairs, (std::vector<std::pair<std::size_t, std::size_t>>{{1, 3}, {0, 2}}));
  EXPECT_THROW(resolve_interaction_spec(InteractionSpec::explicit_list({{"x0", "nope"}}), schema, {}), ValidationError);
  EXPECT_THROW(resolve_interaction_spec(InteractionSpec::explicit_list({{"x0", "x0"}}), schema, {}), ValidationError);
}

}  // namespace
}  // namespace ebm
