#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ebm/dataset.hpp"

namespace ebm {

enum class SynthKind { frequency, severity };

std::string to_string(SynthKind kind);
SynthKind parse_synth_kind(const std::string& text);

enum class ShapeKind { zero, step, linear, sine };

// True shape of one generated feature. Continuous features are uniform on
// [low, high]; categorical features draw `levels` with probabilities `probs`.
struct SynthFeature {
  std::string name;
  Kind kind = Kind::continuous;
  double low = 0.0;
  double high = 1.0;
  ShapeKind shape = ShapeKind::zero;
  std::vector<double> cuts;    // step: right-closed thresholds
  std::vector<double> values;  // step: one more than cuts
  double slope = 0.0;          // linear
  double amplitude = 0.0;      // sine
  double periods = 1.0;        // sine: full periods over [low, high]
  std::vector<std::string> levels;
  std::vector<double> probs;
  std::vector<double> effects;
  // Subtracted from the raw shape; set by centering.
  double offset = 0.0;

  double raw(double x) const;
  double raw(const std::string& label) const;
  // Mean of the raw shape under the sampling distribution.
  double expected_raw() const;
};

// amplitude * u1 * u2 with u the feature rescaled to [-1, 1] (mean zero).
struct SynthInteraction {
  std::string first;
  std::string second;
  double amplitude = 0.0;
};

struct SynthSpec {
  SynthKind kind = SynthKind::frequency;
  std::size_t n_rows = 1000;
  std::uint64_t seed = 0;
  double intercept = 0.0;
  std::vector<SynthFeature> features;
  std::optional<SynthInteraction> interaction;
  bool centered = false;

  void validate() const;
  nlohmann::json to_json() const;
  static SynthSpec from_json(const nlohmann::json& json);
  static SynthSpec load(const std::string& path);
  // Four continuous features with step, linear and sine shapes plus one
  // categorical feature.
  static SynthSpec default_spec(SynthKind kind);
};

// Moves every shape's mean into the intercept so shapes average to zero under
// the sampling distribution. The generated data is unchanged by this.
SynthSpec center_spec(const SynthSpec& spec);

struct SynthResult {
  Dataset data;
  SynthSpec truth;                // centered
  std::vector<double> true_score; // without the exposure offset
};

// Columns: features in spec order, then "exposure" (frequency only) and "y".
SynthResult synth_generate(const SynthSpec& spec);

FeatureSchema synth_schema(const SynthSpec& spec);

// Centered true shape of a feature at each row of `data`.
std::vector<double> true_shape(const SynthSpec& truth, const Dataset& data, const std::string& feature);

// True linear predictor of every row of `data` (columns matched by name).
std::vector<double> true_scores(const SynthSpec& truth, const Dataset& data);

}  // namespace ebm
