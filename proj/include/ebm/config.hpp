#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "ebm/loss.hpp"

namespace ebm {

// The `interactions` setting: a pair count, a fraction of the feature count,
// or an explicit list of feature-name pairs.
struct InteractionSpec {
  enum class Mode { count, fraction, explicit_pairs };

  Mode mode = Mode::fraction;
  double value = 0.9;
  std::vector<std::pair<std::string, std::string>> pairs;

  static InteractionSpec count(std::size_t n) { return {Mode::count, static_cast<double>(n), {}}; }
  static InteractionSpec fraction(double q) { return {Mode::fraction, q, {}}; }
  static InteractionSpec explicit_list(std::vector<std::pair<std::string, std::string>> pairs) {
    return {Mode::explicit_pairs, 0.0, std::move(pairs)};
  }

  nlohmann::json to_json() const;
  static InteractionSpec from_json(const nlohmann::json& json);

  bool operator==(const InteractionSpec&) const = default;
};

// Training hyperparameters. Names and defaults follow the InterpretML
// ExplainableBoostingRegressor parameter table.
struct TrainConfig {
  LossKind objective = LossKind::squared_error;
  std::size_t max_bins = 1024;
  std::size_t max_interaction_bins = 32;
  InteractionSpec interactions = InteractionSpec::fraction(0.9);
  double learning_rate = 0.01;
  std::size_t max_rounds = 25000;
  std::size_t smoothing_rounds = 200;
  std::size_t interaction_smoothing_rounds = 50;
  std::size_t early_stopping_rounds = 50;
  // Relative: an improvement must beat the best validation deviance by this
  // fraction of it.
  double early_stopping_tolerance = 1e-5;
  double validation_size = 0.15;
  std::size_t outer_bags = 14;
  std::size_t inner_bags = 0;
  std::size_t max_leaves = 3;
  std::size_t min_samples_leaf = 2;
  double min_hessian = 1e-4;
  // Only pure cyclic boosting is implemented: greedy_ratio must stay 0 and
  // cyclic_progress 1.
  double greedy_ratio = 0.0;
  double cyclic_progress = 1.0;
  // Leaf value used for Poisson regions without any events.
  double gamma_floor = -10.0;
  std::vector<std::string> exclude;
  std::uint64_t seed = 42;

  // Throws ValidationError on out-of-range values.
  void validate() const;

  nlohmann::json to_json() const;
  // Missing keys keep their defaults; unknown keys are rejected.
  static TrainConfig from_json(const nlohmann::json& json);
  static TrainConfig load(const std::string& path);

  bool operator==(const TrainConfig&) const = default;
};

}  // namespace ebm
