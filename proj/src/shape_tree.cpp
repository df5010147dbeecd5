#include "ebm/shape_tree.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ebm/error.hpp"

namespace ebm {

double leaf_gamma(LossKind kind, const BinStats& stats, double floor) {
  if (!(stats.count > 0.0)) return 0.0;
  switch (kind) {
    case LossKind::poisson_deviance: {
      // sum y = grad + hess since grad = sum(y - mu), hess = sum mu
      if (!(stats.hess > 0.0)) return 0.0;
      const double ratio = (stats.grad + stats.hess) / stats.hess;
      if (!(ratio > 0.0)) return floor;
      return std::max(std::log(ratio), floor);
    }
    case LossKind::gamma_deviance: {
      // hess = sum(y / mu)
      if (!(stats.hess > 0.0)) return floor;
      return std::max(std::log(stats.hess / stats.count), floor);
    }
    case LossKind::squared_error:
      return stats.grad / stats.count;
  }
  return 0.0;
}

double leaf_gamma(LossKind kind, std::span<const double> y, std::span<const double> exposure,
                  std::span<const double> score, double floor) {
  if (y.size() != score.size() || (!exposure.empty() && exposure.size() != y.size())) {
    throw ValidationError("leaf_gamma: input lengths differ");
  }
  if (y.empty()) throw ValidationError("leaf_gamma: empty region");
  double sum_y = 0.0;
  double sum_mu = 0.0;
  double sum_ratio = 0.0;
  double sum_residual = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double e = exposure.empty() ? 1.0 : exposure[i];
    const double mu = uses_log_link(kind) ? e * std::exp(score[i]) : score[i];
    sum_y += y[i];
    sum_mu += mu;
    if (kind == LossKind::gamma_deviance) sum_ratio += y[i] / mu;
    sum_residual += y[i] - mu;
  }
  const double n = static_cast<double>(y.size());
  switch (kind) {
    case LossKind::poisson_deviance:
      if (!(sum_y > 0.0)) return floor;
      return std::max(std::log(sum_y / sum_mu), floor);
    case LossKind::gamma_deviance: return std::max(std::log(sum_ratio / n), floor);
    case LossKind::squared_error: return sum_residual / n;
  }
  return 0.0;
}

double node_gain(const BinStats& stats) {
  return stats.hess > 0.0 ? stats.grad * stats.grad / stats.hess : 0.0;
}

namespace {

bool leaf_ok(const BinStats& s, const TreeParams& params) {
  return s.count >= params.min_samples_leaf && s.hess >= params.min_hessian && s.count > 0.0;
}

BinStats diff(const BinStats& a, const BinStats& b) {
  return {a.grad - b.grad, a.hess - b.hess, a.count - b.count};
}

double split_gain(const BinStats& left, const BinStats& right, const BinStats& parent) {
  return node_gain(left) + node_gain(right) - node_gain(parent);
}

TreeUpdate finish(LossKind kind, std::vector<std::uint32_t> leaf_of_cell, std::vector<BinStats> leaf_stats,
                  double gain, const TreeParams& params) {
  TreeUpdate out;
  out.leaf_of_cell = std::move(leaf_of_cell);
  out.gammas.reserve(leaf_stats.size());
  for (const auto& s : leaf_stats) out.gammas.push_back(leaf_gamma(kind, s, params.gamma_floor));
  out.leaf_stats = std::move(leaf_stats);
  out.gain = gain;
  return out;
}

}  // namespace

TreeUpdate fit_feature_tree(LossKind kind, std::span<const BinStats> bins, const TreeParams& params,
                            SplitMode mode, bool ordinal, std::mt19937_64* rng) {
  const std::size_t k = bins.size();
  if (k == 0) throw ValidationError("tree: no bins");
  if (mode == SplitMode::random && rng == nullptr) throw ValidationError("tree: random splits need a generator");

  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (!ordinal) {
    // Empty bins go last; the rest by mean residual.
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      const bool ea = !(bins[a].count > 0.0);
      const bool eb = !(bins[b].count > 0.0);
      if (ea != eb) return eb;
      if (ea) return false;
      return bins[a].grad / bins[a].count < bins[b].grad / bins[b].count;
    });
  }
  std::vector<BinStats> prefix(k + 1);
  for (std::size_t i = 0; i < k; ++i) {
    prefix[i + 1] = prefix[i];
    prefix[i + 1] += bins[order[i]];
  }
  auto range = [&](std::size_t b, std::size_t e) { return diff(prefix[e], prefix[b]); };

  struct Leaf {
    std::size_t begin;
    std::size_t end;
  };
  std::vector<Leaf> leaves{{0, k}};
  double total_gain = 0.0;
  const std::size_t max_leaves = std::max<std::size_t>(params.max_leaves, 1);

  while (leaves.size() < max_leaves) {
    struct Candidate {
      std::size_t leaf;
      std::size_t cut;
      double gain;
    };
    std::vector<Candidate> valid;
    Candidate best{0, 0, 0.0};
    bool found = false;
    for (std::size_t l = 0; l < leaves.size(); ++l) {
      const auto [b, e] = leaves[l];
      const BinStats parent = range(b, e);
      for (std::size_t p = b + 1; p < e; ++p) {
        const BinStats left = range(b, p);
        const BinStats right = range(p, e);
        if (!leaf_ok(left, params) || !leaf_ok(right, params)) continue;
        const double gain = split_gain(left, right, parent);
        if (mode == SplitMode::random) {
          valid.push_back({l, p, gain});
        } else if (gain > best.gain) {
          best = {l, p, gain};
          found = true;
        }
      }
    }
    if (mode == SplitMode::random) {
      if (valid.empty()) break;
      std::uniform_int_distribution<std::size_t> pick(0, valid.size() - 1);
      best = valid[pick(*rng)];
      found = true;
    }
    if (!found) break;
    const Leaf parent = leaves[best.leaf];
    leaves[best.leaf] = {parent.begin, best.cut};
    leaves.insert(leaves.begin() + static_cast<std::ptrdiff_t>(best.leaf) + 1, Leaf{best.cut, parent.end});
    total_gain += best.gain;
  }

  std::vector<std::uint32_t> leaf_of_cell(k, 0);
  std::vector<BinStats> leaf_stats;
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    for (std::size_t i = leaves[l].begin; i < leaves[l].end; ++i) {
      leaf_of_cell[order[i]] = static_cast<std::uint32_t>(l);
    }
    leaf_stats.push_back(range(leaves[l].begin, leaves[l].end));
  }
  return finish(kind, std::move(leaf_of_cell), std::move(leaf_stats), total_gain, params);
}

namespace {

struct Rect {
  std::size_t r0, r1, c0, c1;  // half-open
};

struct PairSplit {
  bool on_rows = true;
  std::size_t cut = 0;
  double gain = 0.0;
  Rect first{}, second{};
};

BinStats rect_stats(std::span<const BinStats> cells, std::size_t cols, const Rect& rect) {
  BinStats out;
  for (std::size_t r = rect.r0; r < rect.r1; ++r) {
    for (std::size_t c = rect.c0; c < rect.c1; ++c) out += cells[r * cols + c];
  }
  return out;
}

// All valid splits of a rectangle, with gains.
std::vector<PairSplit> rect_splits(std::span<const BinStats> cells, std::size_t cols, const Rect& rect,
                                   const TreeParams& params) {
  std::vector<PairSplit> out;
  const BinStats parent = rect_stats(cells, cols, rect);
  std::vector<BinStats> row_marginal(rect.r1 - rect.r0);
  std::vector<BinStats> col_marginal(rect.c1 - rect.c0);
  for (std::size_t r = rect.r0; r < rect.r1; ++r) {
    for (std::size_t c = rect.c0; c < rect.c1; ++c) {
      row_marginal[r - rect.r0] += cells[r * cols + c];
      col_marginal[c - rect.c0] += cells[r * cols + c];
    }
  }
  auto scan = [&](const std::vector<BinStats>& marginal, bool on_rows) {
    BinStats left;
    for (std::size_t p = 1; p < marginal.size(); ++p) {
      left += marginal[p - 1];
      const BinStats right = diff(parent, left);
      if (!leaf_ok(left, params) || !leaf_ok(right, params)) continue;
      PairSplit split;
      split.on_rows = on_rows;
      split.gain = split_gain(left, right, parent);
      if (on_rows) {
        split.cut = rect.r0 + p;
        split.first = {rect.r0, split.cut, rect.c0, rect.c1};
        split.second = {split.cut, rect.r1, rect.c0, rect.c1};
      } else {
        split.cut = rect.c0 + p;
        split.first = {rect.r0, rect.r1, rect.c0, split.cut};
        split.second = {rect.r0, rect.r1, split.cut, rect.c1};
      }
      out.push_back(split);
    }
  };
  scan(row_marginal, true);
  scan(col_marginal, false);
  return out;
}

// Chooses a split: best positive gain (greedy) or uniform (random).
const PairSplit* choose(const std::vector<PairSplit>& splits, SplitMode mode, std::mt19937_64* rng) {
  if (splits.empty()) return nullptr;
  if (mode == SplitMode::random) {
    std::uniform_int_distribution<std::size_t> pick(0, splits.size() - 1);
    return &splits[pick(*rng)];
  }
  const PairSplit* best = nullptr;
  for (const auto& s : splits) {
    if (s.gain > 0.0 && (best == nullptr || s.gain > best->gain)) best = &s;
  }
  return best;
}

}  // namespace

TreeUpdate fit_pair_tree(LossKind kind, std::span<const BinStats> cells, std::size_t rows, std::size_t cols,
                         const TreeParams& params, SplitMode mode, std::mt19937_64* rng) {
  if (rows * cols != cells.size() || cells.empty()) throw ValidationError("pair tree: grid shape mismatch");
  if (mode == SplitMode::random && rng == nullptr) throw ValidationError("tree: random splits need a generator");

  const Rect whole{0, rows, 0, cols};
  std::vector<Rect> leaves;
  double total_gain = 0.0;
  const auto root_splits = rect_splits(cells, cols, whole, params);
  const PairSplit* root = choose(root_splits, mode, rng);
  if (root == nullptr) {
    leaves.push_back(whole);
  } else {
    total_gain += root->gain;
    for (const Rect& child : {root->first, root->second}) {
      const auto child_splits = rect_splits(cells, cols, child, params);
      const PairSplit* split = choose(child_splits, mode, rng);
      if (split == nullptr) {
        leaves.push_back(child);
      } else {
        total_gain += split->gain;
        leaves.push_back(split->first);
        leaves.push_back(split->second);
      }
    }
  }

  std::vector<std::uint32_t> leaf_of_cell(cells.size(), 0);
  std::vector<BinStats> leaf_stats;
  for (std::size_t l = 0; l < leaves.size(); ++l) {
    const Rect& rect = leaves[l];
    for (std::size_t r = rect.r0; r < rect.r1; ++r) {
      for (std::size_t c = rect.c0; c < rect.c1; ++c) leaf_of_cell[r * cols + c] = static_cast<std::uint32_t>(l);
    }
    leaf_stats.push_back(rect_stats(cells, cols, rect));
  }
  return finish(kind, std::move(leaf_of_cell), std::move(leaf_stats), total_gain, params);
}

}  // namespace ebm
