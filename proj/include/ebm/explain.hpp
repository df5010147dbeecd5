#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "ebm/dataset.hpp"
#include "ebm/loss.hpp"
#include "ebm/model.hpp"

namespace ebm {

enum class ImportanceMethod { shape, permutation };

std::string to_string(ImportanceMethod method);
ImportanceMethod parse_importance_method(const std::string& text);

struct TermImportance {
  std::string term;
  double importance = 0.0;
  double relative = 0.0;
};

struct ImportanceReport {
  ImportanceMethod method = ImportanceMethod::shape;
  std::vector<TermImportance> terms;
};

// Weighted mean absolute score of every model term, weights being the bin
// counts of `data`. Relative values sum to one (all zero if every term is).
ImportanceReport term_importance(const EbmModel& model, const Dataset& data);

// Increase of the mean deviance when one feature column of `data` is randomly
// permuted, averaged over `repeats`. One entry per data feature; features the
// model does not use get exactly 0. Relative values use the positive parts.
ImportanceReport permutation_importance(const EbmModel& model, const Dataset& data, LossKind kind,
                                        std::uint64_t seed, std::size_t repeats = 1);

struct PdpCurve {
  std::string feature;
  Kind kind = Kind::continuous;
  std::vector<double> grid;          // continuous features
  std::vector<std::string> labels;   // categorical features
  std::vector<double> pd;
  std::vector<std::size_t> ice_rows;
  std::vector<std::vector<double>> ice;  // ice[sample][grid point]
  std::size_t size() const { return pd.size(); }
};

// Partial dependence of the predicted mean on `feature`. Continuous grids are
// the per-bin medians of `data` when grid_size is 0, otherwise grid_size
// quantiles; categorical grids are the model's labels. ice_sample rows (drawn
// with `seed`) get individual curves.
PdpCurve pdp(const EbmModel& model, const Dataset& data, const std::string& feature, std::size_t grid_size = 0,
             std::size_t ice_sample = 0, std::uint64_t seed = 0);

// Same curve by rewriting the column and re-predicting every row.
PdpCurve pdp_brute_force(const EbmModel& model, const Dataset& data, const std::string& feature,
                         std::size_t grid_size = 0, std::size_t ice_sample = 0, std::uint64_t seed = 0);

struct LocalExplanation {
  double intercept = 0.0;
  std::vector<TermContribution> terms;  // descending score, ties keep term order
  double score = 0.0;                   // summed in model term order
  double prediction = 0.0;
};

LocalExplanation local_explain(const EbmModel& model, const Dataset& data, std::size_t row);

struct ShapeRecord {
  std::size_t row = 0;
  std::size_t col = 0;
  std::string row_label;
  std::string col_label;  // empty for main terms
  double score = 0.0;
  double stderr_value = 0.0;
  double weight = 0.0;
};

struct ShapeExport {
  std::string term;
  bool pair = false;
  std::vector<ShapeRecord> records;  // bin order; row-major for pairs
};

ShapeExport export_shape(const EbmModel& model, const std::string& term);

enum class Direction { increasing, decreasing };
Direction parse_direction(const std::string& text);

// Weighted pool-adjacent-violators fit. Zero-weight entries do not pull the
// fit and copy their nearest preceding fitted value.
std::vector<double> isotonic_fit(std::span<const double> values, std::span<const double> weights,
                                 Direction direction);

// Replaces a continuous feature's shape by its weighted isotonic fit and
// re-centers it; all other terms are left as they are.
EbmModel monotonize(const EbmModel& model, const std::string& feature, Direction direction);

std::string importance_to_csv(const ImportanceReport& report);
std::string pdp_to_csv(const PdpCurve& curve);
std::string local_to_csv(const LocalExplanation& explanation);
std::string shape_to_csv(const ShapeExport& shape);

}  // namespace ebm
