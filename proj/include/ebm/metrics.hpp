#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ebm/loss.hpp"

namespace ebm {

struct ErrorSummary {
  double rmse = 0.0;
  double mae = 0.0;
};

ErrorSummary rmse_mae(std::span<const double> y, std::span<const double> pred);

// Explained deviance ratio 1 - D(pred) / D(null). The null model is the
// deviance-minimizing constant of this same data. For Poisson, `pred` are
// rates and the expected counts are exposure * pred.
double edr(LossKind kind, std::span<const double> y, std::span<const double> pred,
           std::span<const double> exposure = {});

// Normalized Gini index. Tied predictions share their average rank, so a
// constant predictor scores exactly 0.
double gini_norm(std::span<const double> y, std::span<const double> pred);

struct MurphyCurve {
  std::vector<double> thetas;
  std::vector<double> s_values;
};

// 501 (by default) equally spaced thetas over [min, max) of pred and y.
std::vector<double> default_murphy_grid(std::span<const double> y, std::span<const double> pred,
                                        std::size_t points = 501);

// Elementary scores S_theta over a sorted grid; an empty grid selects the
// default one. Prefix sums plus binary search, O((n + m) log n).
MurphyCurve murphy_curve(std::span<const double> y, std::span<const double> pred,
                         std::span<const double> thetas = {});

// Direct O(n m) evaluation of the definition; reference for the above.
MurphyCurve murphy_curve_naive(std::span<const double> y, std::span<const double> pred,
                               std::span<const double> thetas);

enum class Dominance { a_dominates, b_dominates, neither };

std::string to_string(Dominance d);

inline constexpr double kDominanceTolerance = 1e-9;

// A dominates when S_A <= S_B everywhere and S_A < S_B somewhere. Values
// closer than kDominanceTolerance times the largest curve value are equal.
Dominance dominance(const MurphyCurve& a, const MurphyCurve& b);

struct Histogram {
  std::vector<double> edges;  // bins + 1 edges
  std::vector<std::size_t> counts;
};

// Equal-width bins over [min, max]; the last bin is closed.
Histogram histogram(std::span<const double> values, std::size_t bins = 50);

struct MetricReport {
  double rmse = 0.0;
  double mae = 0.0;
  double edr = 0.0;
  double gini_norm = 0.0;
  std::size_t n = 0;
  LossKind objective = LossKind::squared_error;
};

// All scalar metrics at once. RMSE, MAE and Gini compare y with the expected
// response (exposure * pred for Poisson, pred otherwise).
MetricReport evaluate_predictions(LossKind kind, std::span<const double> y, std::span<const double> pred,
                                  std::span<const double> exposure = {});

}  // namespace ebm
