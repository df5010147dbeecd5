#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "ebm/config.hpp"
#include "ebm/dataset.hpp"
#include "ebm/model.hpp"

namespace ebm {

// Residual sum-of-squares reduction of the best single 2x2 cut of a
// rows x cols grid of residual sums and counts (row-major).
double best_quadrant_gain(std::span<const double> sums, std::span<const double> counts, std::size_t rows,
                          std::size_t cols);

// Ranks every unordered feature pair by the strength of its best 2x2 cut on
// the pseudo-residuals of `model` (normally mains only). Sorted by descending
// strength, ties by (first, second).
std::vector<RankedPair> fast_rank(const Dataset& data, const EbmModel& model);

// Same ranking from precomputed per-row residuals.
std::vector<RankedPair> fast_rank(const Dataset& data, std::span<const double> residuals,
                                  std::size_t max_interaction_bins);

// Pairs to fit for an interaction setting. Count -> top n, fraction q ->
// top floor(q * p), explicit list -> validated verbatim (feature indices into
// the schema features).
std::vector<std::pair<std::size_t, std::size_t>> resolve_interaction_spec(const InteractionSpec& spec,
                                                                          const FeatureSchema& schema,
                                                                          std::span<const RankedPair> ranked);

}  // namespace ebm
