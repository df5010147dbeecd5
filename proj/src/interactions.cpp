#include "ebm/interactions.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ebm/error.hpp"

namespace ebm {

double best_quadrant_gain(std::span<const double> sums, std::span<const double> counts, std::size_t rows,
                          std::size_t cols) {
  if (sums.size() != rows * cols || counts.size() != sums.size()) {
    throw ValidationError("interaction grid: shape mismatch");
  }
  // prefix[r][c] = totals over rows < r and cols < c
  const std::size_t stride = cols + 1;
  std::vector<double> ps((rows + 1) * stride, 0.0);
  std::vector<double> pc((rows + 1) * stride, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const std::size_t at = (r + 1) * stride + (c + 1);
      ps[at] = sums[r * cols + c] + ps[r * stride + c + 1] + ps[(r + 1) * stride + c] - ps[r * stride + c];
      pc[at] = counts[r * cols + c] + pc[r * stride + c + 1] + pc[(r + 1) * stride + c] - pc[r * stride + c];
    }
  }
  const double total_s = ps[rows * stride + cols];
  const double total_n = pc[rows * stride + cols];
  if (!(total_n > 0.0)) return 0.0;
  const double base = total_s * total_s / total_n;
  auto term = [](double s, double n) { return n > 0.0 ? s * s / n : 0.0; };
  double best = 0.0;
  for (std::size_t r = 1; r < rows; ++r) {
    for (std::size_t c = 1; c < cols; ++c) {
      const double s00 = ps[r * stride + c];
      const double n00 = pc[r * stride + c];
      const double s01 = ps[r * stride + cols] - s00;
      const double n01 = pc[r * stride + cols] - n00;
      const double s10 = ps[rows * stride + c] - s00;
      const double n10 = pc[rows * stride + c] - n00;
      const double s11 = total_s - s00 - s01 - s10;
      const double n11 = total_n - n00 - n01 - n10;
      const double gain = term(s00, n00) + term(s01, n01) + term(s10, n10) + term(s11, n11) - base;
      best = std::max(best, gain);
    }
  }
  return best;
}

std::vector<RankedPair> fast_rank(const Dataset& data, std::span<const double> residuals,
                                  std::size_t max_interaction_bins) {
  const std::size_t p = data.feature_count();
  if (p < 2) throw ValidationError("interaction ranking needs at least two features");
  if (residuals.size() != data.n_rows()) throw ValidationError("interaction ranking: residual count mismatch");
  std::vector<FeatureBins> axes;
  std::vector<std::vector<std::int32_t>> index;
  for (std::size_t j = 0; j < p; ++j) {
    axes.push_back(build_axis_bins(data.column(j), max_interaction_bins));
    index.push_back(axes.back().index_column(data.column(j)));
  }
  std::vector<RankedPair> ranked;
  for (std::size_t a = 0; a < p; ++a) {
    for (std::size_t b = a + 1; b < p; ++b) {
      const std::size_t rows = axes[a].bin_count();
      const std::size_t cols = axes[b].bin_count();
      std::vector<double> sums(rows * cols, 0.0);
      std::vector<double> counts(rows * cols, 0.0);
      for (std::size_t i = 0; i < residuals.size(); ++i) {
        const std::size_t cell = static_cast<std::size_t>(index[a][i]) * cols + static_cast<std::size_t>(index[b][i]);
        sums[cell] += residuals[i];
        counts[cell] += 1.0;
      }
      ranked.push_back({a, b, best_quadrant_gain(sums, counts, rows, cols)});
    }
  }
  std::stable_sort(ranked.begin(), ranked.end(), [](const RankedPair& x, const RankedPair& y) {
    if (x.strength != y.strength) return x.strength > y.strength;
    if (x.first != y.first) return x.first < y.first;
    return x.second < y.second;
  });
  return ranked;
}

std::vector<RankedPair> fast_rank(const Dataset& data, const EbmModel& model) {
  if (!data.has_target()) throw ValidationError("interaction ranking needs targets");
  const auto scores = predict_scores(model, data);
  std::vector<double> residuals(data.n_rows());
  for (std::size_t i = 0; i < residuals.size(); ++i) {
    const double y = data.target()[i];
    const double s = scores[i];
    switch (model.objective) {
      case LossKind::poisson_deviance: residuals[i] = y - data.exposure()[i] * std::exp(s); break;
      case LossKind::gamma_deviance: residuals[i] = (y - std::exp(s)) / std::exp(s); break;
      case LossKind::squared_error: residuals[i] = y - s; break;
    }
  }
  // Ranking runs on the data's own feature order; map back to model indices.
  auto ranked = fast_rank(data, residuals, model.config.max_interaction_bins);
  for (auto& r : ranked) {
    const auto a = model.schema.feature_index(data.column(r.first).name);
    const auto b = model.schema.feature_index(data.column(r.second).name);
    if (!a || !b) throw ValidationError("schema mismatch between data and model");
    r.first = std::min(*a, *b);
    r.second = std::max(*a, *b);
  }
  return ranked;
}

std::vector<std::pair<std::size_t, std::size_t>> resolve_interaction_spec(const InteractionSpec& spec,
                                                                          const FeatureSchema& schema,
                                                                          std::span<const RankedPair> ranked) {
  const std::size_t p = schema.feature_count();
  const std::size_t max_pairs = p < 2 ? 0 : p * (p - 1) / 2;
  std::vector<std::pair<std::size_t, std::size_t>> out;
  if (spec.mode == InteractionSpec::Mode::explicit_pairs) {
    std::set<std::pair<std::size_t, std::size_t>> seen;
    for (const auto& [a, b] : spec.pairs) {
      const auto ia = schema.feature_index(a);
      const auto ib = schema.feature_index(b);
      if (!ia) throw ValidationError("interactions: unknown feature '" + a + "'");
      if (!ib) throw ValidationError("interactions: unknown feature '" + b + "'");
      if (*ia == *ib) throw ValidationError("interactions: pair (" + a + ", " + b + ") repeats a feature");
      const std::pair<std::size_t, std::size_t> pair{std::min(*ia, *ib), std::max(*ia, *ib)};
      if (seen.insert(pair).second) out.push_back(pair);
    }
    return out;
  }
  std::size_t wanted = 0;
  if (spec.mode == InteractionSpec::Mode::count) {
    wanted = static_cast<std::size_t>(spec.value);
  } else {
    // small slack so that e.g. 0.57 * 100 is 57, not 56.999...
    wanted = static_cast<std::size_t>(std::floor(spec.value * static_cast<double>(p) + 1e-9));
  }
  wanted = std::min({wanted, max_pairs, ranked.size()});
  for (std::size_t i = 0; i < wanted; ++i) out.emplace_back(ranked[i].first, ranked[i].second);
  return out;
}

}  // namespace ebm
