#include "ebm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ebm/error.hpp"

namespace ebm {

namespace {

void check_pair(std::span<const double> y, std::span<const double> pred, const char* what) {
  if (y.empty()) throw ValidationError(std::string(what) + ": empty input");
  if (y.size() != pred.size()) throw ValidationError(std::string(what) + ": length mismatch");
}

// 1-based ranks with ties sharing their mean rank.
std::vector<double> mid_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    const double rank = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

struct SortedSide {
  std::vector<double> keys;    // ascending
  std::vector<double> prefix;  // prefix[k] = sum of y over the first k keys
};

SortedSide sorted_side(std::vector<std::pair<double, double>> key_y) {
  std::sort(key_y.begin(), key_y.end());
  SortedSide side;
  side.prefix.push_back(0.0);
  for (const auto& [key, yv] : key_y) {
    side.keys.push_back(key);
    side.prefix.push_back(side.prefix.back() + yv);
  }
  return side;
}

// Count and y-sum of entries with key <= theta.
std::pair<double, double> upto(const SortedSide& side, double theta) {
  const auto k = static_cast<std::size_t>(std::upper_bound(side.keys.begin(), side.keys.end(), theta) -
                                          side.keys.begin());
  return {static_cast<double>(k), side.prefix[k]};
}

}  // namespace

ErrorSummary rmse_mae(std::span<const double> y, std::span<const double> pred) {
  check_pair(y, pred, "rmse_mae");
  double se = 0.0;
  double ae = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double d = y[i] - pred[i];
    se += d * d;
    ae += std::abs(d);
  }
  const auto n = static_cast<double>(y.size());
  return {std::sqrt(se / n), ae / n};
}

double edr(LossKind kind, std::span<const double> y, std::span<const double> pred,
           std::span<const double> exposure) {
  check_pair(y, pred, "edr");
  const Intercept null_fit = init_intercept(kind, y, exposure);
  const std::vector<double> null_pred(y.size(), null_fit.mean);
  const double null_dev = deviance(kind, y, null_pred, exposure);
  if (!(null_dev > 0.0)) throw ValidationError("edr: null deviance is zero");
  return 1.0 - deviance(kind, y, pred, exposure) / null_dev;
}

double gini_norm(std::span<const double> y, std::span<const double> pred) {
  check_pair(y, pred, "gini_norm");
  const double total = std::accumulate(y.begin(), y.end(), 0.0);
  if (!(total > 0.0)) throw ValidationError("gini_norm: sum of targets must be positive");
  const auto n = static_cast<double>(y.size());
  const double base = (n + 1.0) / 2.0;
  auto lorenz = [&](const std::vector<double>& ranks) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += ranks[i] * y[i];
    return s / total - base;
  };
  const double denom = lorenz(mid_ranks(y));
  if (denom == 0.0) throw ValidationError("gini_norm: target is constant");
  return lorenz(mid_ranks(pred)) / denom;
}

std::vector<double> default_murphy_grid(std::span<const double> y, std::span<const double> pred,
                                        std::size_t points) {
  if (y.empty() && pred.empty()) throw ValidationError("murphy grid: empty input");
  if (points == 0) throw ValidationError("murphy grid: needs at least one point");
  double lo = INFINITY;
  double hi = -INFINITY;
  for (double v : y) lo = std::min(lo, v), hi = std::max(hi, v);
  for (double v : pred) lo = std::min(lo, v), hi = std::max(hi, v);
  std::vector<double> grid(points);
  for (std::size_t k = 0; k < points; ++k) {
    grid[k] = lo + static_cast<double>(k) * (hi - lo) / static_cast<double>(points);
  }
  return grid;
}

MurphyCurve murphy_curve(std::span<const double> y, std::span<const double> pred, std::span<const double> thetas) {
  check_pair(y, pred, "murphy_curve");
  MurphyCurve curve;
  curve.thetas = thetas.empty() ? default_murphy_grid(y, pred) : std::vector<double>(thetas.begin(), thetas.end());
  if (!std::is_sorted(curve.thetas.begin(), curve.thetas.end())) {
    throw ValidationError("murphy_curve: thetas must be sorted");
  }
  // Rows with y <= F contribute theta - y on [y, F); rows with F < y
  // contribute y - theta on [F, y).
  std::vector<std::pair<double, double>> low_start, low_end, high_start, high_end;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == pred[i]) continue;
    if (y[i] < pred[i]) {
      low_start.emplace_back(y[i], y[i]);
      low_end.emplace_back(pred[i], y[i]);
    } else {
      high_start.emplace_back(pred[i], y[i]);
      high_end.emplace_back(y[i], y[i]);
    }
  }
  const SortedSide ls = sorted_side(std::move(low_start));
  const SortedSide le = sorted_side(std::move(low_end));
  const SortedSide hs = sorted_side(std::move(high_start));
  const SortedSide he = sorted_side(std::move(high_end));
  const auto n = static_cast<double>(y.size());
  curve.s_values.reserve(curve.thetas.size());
  for (double theta : curve.thetas) {
    const auto [c_ls, s_ls] = upto(ls, theta);
    const auto [c_le, s_le] = upto(le, theta);
    const auto [c_hs, s_hs] = upto(hs, theta);
    const auto [c_he, s_he] = upto(he, theta);
    const double low = (c_ls - c_le) * theta - (s_ls - s_le);
    const double high = (s_hs - s_he) - (c_hs - c_he) * theta;
    curve.s_values.push_back(std::max(0.0, (low + high) / n));
  }
  return curve;
}

MurphyCurve murphy_curve_naive(std::span<const double> y, std::span<const double> pred,
                               std::span<const double> thetas) {
  check_pair(y, pred, "murphy_curve");
  MurphyCurve curve;
  curve.thetas.assign(thetas.begin(), thetas.end());
  for (double theta : thetas) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      if (std::min(pred[i], y[i]) <= theta && theta < std::max(pred[i], y[i])) s += std::abs(theta - y[i]);
    }
    curve.s_values.push_back(s / static_cast<double>(y.size()));
  }
  return curve;
}

std::string to_string(Dominance d) {
  switch (d) {
    case Dominance::a_dominates: return "A_dominates";
    case Dominance::b_dominates: return "B_dominates";
    case Dominance::neither: return "neither";
  }
  return "neither";
}

Dominance dominance(const MurphyCurve& a, const MurphyCurve& b) {
  if (a.thetas != b.thetas || a.s_values.size() != a.thetas.size() || b.s_values.size() != b.thetas.size()) {
    throw ValidationError("dominance: curves use different theta grids");
  }
  // Differences below the summation rounding of the curves count as ties.
  double scale = 0.0;
  for (double v : a.s_values) scale = std::max(scale, std::abs(v));
  for (double v : b.s_values) scale = std::max(scale, std::abs(v));
  const double tol = kDominanceTolerance * scale;
  bool a_le = true, b_le = true, a_lt = false, b_lt = false;
  for (std::size_t k = 0; k < a.s_values.size(); ++k) {
    const double sa = a.s_values[k];
    const double sb = b.s_values[k];
    if (sa > sb + tol) a_le = false;
    if (sb > sa + tol) b_le = false;
    if (sa < sb - tol) a_lt = true;
    if (sb < sa - tol) b_lt = true;
  }
  if (a_le && a_lt) return Dominance::a_dominates;
  if (b_le && b_lt) return Dominance::b_dominates;
  return Dominance::neither;
}

Histogram histogram(std::span<const double> values, std::size_t bins) {
  if (values.empty()) throw ValidationError("histogram: empty input");
  if (bins == 0) throw ValidationError("histogram: needs at least one bin");
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  Histogram h;
  h.counts.assign(bins, 0);
  for (std::size_t k = 0; k <= bins; ++k) {
    h.edges.push_back(k == bins ? hi : lo + static_cast<double>(k) * (hi - lo) / static_cast<double>(bins));
  }
  for (double v : values) {
    std::size_t k = 0;
    if (hi > lo) {
      k = static_cast<std::size_t>((v - lo) / (hi - lo) * static_cast<double>(bins));
      k = std::min(k, bins - 1);
    }
    ++h.counts[k];
  }
  return h;
}

MetricReport evaluate_predictions(LossKind kind, std::span<const double> y, std::span<const double> pred,
                                  std::span<const double> exposure) {
  check_pair(y, pred, "evaluate");
  if (!exposure.empty() && exposure.size() != y.size()) throw ValidationError("evaluate: exposure length mismatch");
  std::vector<double> expected(pred.begin(), pred.end());
  if (kind == LossKind::poisson_deviance && !exposure.empty()) {
    for (std::size_t i = 0; i < expected.size(); ++i) expected[i] *= exposure[i];
  }
  MetricReport report;
  const auto errors = rmse_mae(y, expected);
  report.rmse = errors.rmse;
  report.mae = errors.mae;
  report.edr = edr(kind, y, pred, exposure);
  report.gini_norm = gini_norm(y, expected);
  report.n = y.size();
  report.objective = kind;
  return report;
}

}  // namespace ebm
