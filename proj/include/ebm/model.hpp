#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ebm/binning.hpp"
#include "ebm/config.hpp"
#include "ebm/dataset.hpp"
#include "ebm/loss.hpp"

namespace ebm {

inline constexpr int kModelFormatVersion = 1;

// Per-bin scores of one feature in score (link) space, bag standard errors.
struct MainTerm {
  std::size_t feature = 0;
  std::vector<double> scores;
  std::vector<double> stderrs;

  bool operator==(const MainTerm&) const = default;
};

// Score grid of a feature pair, row-major over (rows axis, cols axis).
struct PairTerm {
  std::size_t first = 0;
  std::size_t second = 0;
  FeatureBins rows;
  FeatureBins cols;
  std::vector<double> weights;
  std::vector<double> scores;
  std::vector<double> stderrs;

  std::size_t cell(std::size_t r, std::size_t c) const { return r * cols.bin_count() + c; }
  bool operator==(const PairTerm&) const = default;
};

struct BagRecord {
  std::size_t stop_round = 0;
  std::size_t best_round = 0;
  double best_validation_deviance = 0.0;
  std::vector<double> validation_curve;  // after each round; [0] is before boosting
  std::vector<double> training_curve;    // only when recorded

  bool operator==(const BagRecord&) const = default;
};

struct RankedPair {
  std::size_t first = 0;
  std::size_t second = 0;
  double strength = 0.0;

  bool operator==(const RankedPair&) const = default;
};

struct TrainingMeta {
  std::vector<BagRecord> main_bags;
  std::vector<BagRecord> pair_bags;
  std::vector<RankedPair> ranked_pairs;
  std::size_t n_train = 0;
  double wall_seconds = 0.0;  // not serialized
  nlohmann::json manifest;    // free-form run description, serialized verbatim
};

// Fitted additive model: score = intercept + sum of main terms + sum of pair
// terms; prediction = inverse link of the score.
struct EbmModel {
  FeatureSchema schema;
  LossKind objective = LossKind::squared_error;
  std::vector<FeatureBins> bins;  // one per schema feature
  double intercept = 0.0;
  std::vector<MainTerm> mains;  // one per schema feature, same order
  std::vector<PairTerm> pairs;
  TrainConfig config;
  TrainingMeta meta;

  std::size_t feature_count() const { return bins.size(); }
  std::size_t term_count() const { return mains.size() + pairs.size(); }
  // "age" for mains, "age:price" for pairs.
  std::string term_name(std::size_t term) const;
  std::optional<std::size_t> find_term(const std::string& name) const;
  const std::string& feature_name(std::size_t feature) const { return bins.at(feature).name(); }
};

// Versioned JSON with every real written as a 17-significant-digit string.
nlohmann::json model_to_json(const EbmModel& model);
EbmModel model_from_json(const nlohmann::json& json);
std::string dump_model(const EbmModel& model);
void save_model(const EbmModel& model, const std::string& path);
EbmModel load_model(const std::string& path);

// Per-row bin (mains) and cell (pairs) indices; -1 for unseen categories.
struct BinnedRows {
  std::vector<std::vector<std::int32_t>> mains;
  std::vector<std::vector<std::int32_t>> pairs;
  std::size_t n_rows = 0;
};

// Matches data columns to model features by name and kind.
BinnedRows bin_rows(const EbmModel& model, const Dataset& data);

// Linear predictors (without any exposure offset).
std::vector<double> predict_scores(const EbmModel& model, const Dataset& data);
std::vector<double> predict_scores(const EbmModel& model, const BinnedRows& rows);

// Predicted means F(x) = g^-1(score). Poisson callers multiply by exposure to
// obtain expected counts.
std::vector<double> predict(const EbmModel& model, const Dataset& data);

struct TermContribution {
  std::size_t term = 0;
  std::string name;
  double score = 0.0;
};

struct TermScores {
  double intercept = 0.0;
  std::vector<TermContribution> terms;  // model term order
  double total() const;                 // summed in the same order as predict
};

TermScores score_terms(const EbmModel& model, const Dataset& data, std::size_t row);

// Shifts every term to weighted mean zero (bin weights) and folds the shifts
// into the intercept.
void center_terms(EbmModel& model);

}  // namespace ebm
