#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "ebm/dataset.hpp"

namespace ebm {

// Discretization of one feature. Continuous bins are (-inf, c1], (c1, c2], ...,
// (c_{K-1}, inf). Categorical bins map labels to bin slots; for main effects
// every label owns one bin, pair axes may pool rare labels into a shared last
// bin. `weights` holds training observation counts per bin.
class FeatureBins {
 public:
  FeatureBins() = default;
  static FeatureBins continuous(std::string name, std::vector<double> cuts, std::vector<double> weights);
  static FeatureBins categorical(std::string name, std::vector<std::string> labels,
                                 std::vector<std::uint32_t> label_bins, std::vector<double> weights);

  const std::string& name() const { return name_; }
  Kind kind() const { return kind_; }
  std::size_t bin_count() const { return weights_.size(); }
  const std::vector<double>& cuts() const { return cuts_; }
  const std::vector<std::string>& labels() const { return labels_; }
  const std::vector<std::uint32_t>& label_bins() const { return label_bins_; }
  const std::vector<double>& weights() const { return weights_; }

  // O(log K). Throws ValidationError on NaN.
  std::size_t index(double value) const;
  // std::nullopt for labels never seen during training.
  std::optional<std::size_t> index(const std::string& label) const;

  // Bin of every row of a matching column; -1 marks unknown categories.
  std::vector<std::int32_t> index_column(const Column& column) const;

  // Human readable bin description: "(a, b]" intervals or the label list.
  std::string describe(std::size_t bin) const;

  nlohmann::json to_json() const;
  static FeatureBins from_json(const nlohmann::json& json);

  bool operator==(const FeatureBins& other) const {
    return name_ == other.name_ && kind_ == other.kind_ && cuts_ == other.cuts_ && labels_ == other.labels_ &&
           label_bins_ == other.label_bins_ && weights_ == other.weights_;
  }

 private:
  void rebuild_lookup();

  std::string name_;
  Kind kind_ = Kind::continuous;
  std::vector<double> cuts_;
  std::vector<std::string> labels_;
  std::vector<std::uint32_t> label_bins_;
  std::vector<double> weights_;
  std::unordered_map<std::string, std::uint32_t> lookup_;
};

// Quantile bins for a continuous column, one bin per label (first appearance
// order) for a categorical column.
FeatureBins build_bins(const Column& column, std::size_t max_bins);
FeatureBins build_bins(const Dataset& data, const std::string& feature, std::size_t max_bins);

// Cut points only; exposed for testing. `values` need not be sorted.
std::vector<double> quantile_cuts(std::span<const double> values, std::size_t max_bins);

struct PairBins {
  std::size_t first = 0;
  std::size_t second = 0;
  FeatureBins rows;  // axis of `first`
  FeatureBins cols;  // axis of `second`
  std::vector<double> weights;  // row-major rows.bin_count() x cols.bin_count()

  std::size_t cell(std::size_t r, std::size_t c) const { return r * cols.bin_count() + c; }
  std::size_t cell_count() const { return rows.bin_count() * cols.bin_count(); }
};

// Each axis rebinned at max_interaction_bins; categorical axes with more
// labels than that keep the most frequent ones and pool the rest.
PairBins build_pair_bins(const Dataset& data, std::size_t first, std::size_t second,
                         std::size_t max_interaction_bins);

// Coarse axis used for pair terms.
FeatureBins build_axis_bins(const Column& column, std::size_t max_bins);

}  // namespace ebm
