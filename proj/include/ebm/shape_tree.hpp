#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "ebm/loss.hpp"

namespace ebm {

// Per-bin sufficient statistics of the current pseudo-residuals.
struct BinStats {
  double grad = 0.0;   // sum of pseudo-residuals
  double hess = 0.0;   // sum of hessians
  double count = 0.0;  // observations (or bootstrap multiplicities)

  BinStats& operator+=(const BinStats& other) {
    grad += other.grad;
    hess += other.hess;
    count += other.count;
    return *this;
  }
};

enum class SplitMode { greedy, random };

struct TreeParams {
  std::size_t max_leaves = 3;
  double min_samples_leaf = 2.0;
  double min_hessian = 1e-4;
  double gamma_floor = -10.0;
};

// One boosting step for a term: a partition of the term's cells into leaves
// plus the loss-minimizing score increment of each leaf.
struct TreeUpdate {
  std::vector<std::uint32_t> leaf_of_cell;
  std::vector<double> gammas;
  std::vector<BinStats> leaf_stats;
  double gain = 0.0;

  std::size_t leaf_count() const { return gammas.size(); }
  double delta(std::size_t cell) const { return gammas[leaf_of_cell[cell]]; }
};

// Exact regional minimizer in score space from aggregated statistics.
// Poisson: ln(sum y / sum mu); gamma: ln(sum(y/mu) / count); squared: mean
// residual. Regions without observations get 0; a Poisson region without
// events gets `floor`.
double leaf_gamma(LossKind kind, const BinStats& stats, double floor = -10.0);

// Same minimizer from raw region members; mu = exposure * exp(score).
double leaf_gamma(LossKind kind, std::span<const double> y, std::span<const double> exposure,
                  std::span<const double> score, double floor = -10.0);

// Split gain of a node: (sum g)^2 / sum h.
double node_gain(const BinStats& stats);

// Tree over a single bin axis. Ordinal axes split between adjacent bins;
// categorical axes are first ordered by mean residual. Random mode draws each
// cut uniformly among the currently valid cut positions.
TreeUpdate fit_feature_tree(LossKind kind, std::span<const BinStats> bins, const TreeParams& params,
                            SplitMode mode, bool ordinal, std::mt19937_64* rng = nullptr);

// Depth-2 axis-aligned tree over a row-major rows x cols grid (<= 4 leaves).
TreeUpdate fit_pair_tree(LossKind kind, std::span<const BinStats> cells, std::size_t rows, std::size_t cols,
                         const TreeParams& params, SplitMode mode, std::mt19937_64* rng = nullptr);

}  // namespace ebm
