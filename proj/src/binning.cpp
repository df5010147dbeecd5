#include "ebm/binning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "ebm/error.hpp"
#include "ebm/numfmt.hpp"

namespace ebm {

FeatureBins FeatureBins::continuous(std::string name, std::vector<double> cuts, std::vector<double> weights) {
  if (weights.size() != cuts.size() + 1) throw ValidationError("bins: weight count must be cut count + 1");
  for (std::size_t i = 1; i < cuts.size(); ++i) {
    if (!(cuts[i - 1] < cuts[i])) throw ValidationError("bins: cut points must be strictly increasing");
  }
  FeatureBins out;
  out.name_ = std::move(name);
  out.kind_ = Kind::continuous;
  out.cuts_ = std::move(cuts);
  out.weights_ = std::move(weights);
  return out;
}

FeatureBins FeatureBins::categorical(std::string name, std::vector<std::string> labels,
                                     std::vector<std::uint32_t> label_bins, std::vector<double> weights) {
  if (label_bins.size() != labels.size()) throw ValidationError("bins: one bin slot per label required");
  if (weights.empty()) throw ValidationError("bins: categorical feature without bins");
  for (auto bin : label_bins) {
    if (bin >= weights.size()) throw ValidationError("bins: label mapped outside the bin range");
  }
  FeatureBins out;
  out.name_ = std::move(name);
  out.kind_ = Kind::categorical;
  out.labels_ = std::move(labels);
  out.label_bins_ = std::move(label_bins);
  out.weights_ = std::move(weights);
  out.rebuild_lookup();
  return out;
}

void FeatureBins::rebuild_lookup() {
  lookup_.clear();
  for (std::size_t i = 0; i < labels_.size(); ++i) lookup_.emplace(labels_[i], label_bins_[i]);
}

std::size_t FeatureBins::index(double value) const {
  if (std::isnan(value)) throw ValidationError("bin lookup: NaN value for '" + name_ + "'");
  return static_cast<std::size_t>(std::lower_bound(cuts_.begin(), cuts_.end(), value) - cuts_.begin());
}

std::optional<std::size_t> FeatureBins::index(const std::string& label) const {
  const auto it = lookup_.find(label);
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::int32_t> FeatureBins::index_column(const Column& column) const {
  if (column.kind != kind_) throw ValidationError("feature '" + name_ + "': column kind differs from the model");
  std::vector<std::int32_t> out;
  out.reserve(column.size());
  if (kind_ == Kind::continuous) {
    for (double v : column.values) out.push_back(static_cast<std::int32_t>(index(v)));
    return out;
  }
  std::vector<std::int32_t> by_code;
  by_code.reserve(column.labels.size());
  for (const auto& label : column.labels) {
    const auto bin = index(label);
    by_code.push_back(bin ? static_cast<std::int32_t>(*bin) : -1);
  }
  for (auto code : column.codes) out.push_back(by_code[static_cast<std::size_t>(code)]);
  return out;
}

std::string FeatureBins::describe(std::size_t bin) const {
  if (kind_ == Kind::continuous) {
    const std::string lo = bin == 0 ? "-inf" : format_real(cuts_[bin - 1]);
    const std::string hi = bin == cuts_.size() ? "inf" : format_real(cuts_[bin]);
    return "(" + lo + ", " + hi + "]";
  }
  std::string out;
  for (std::size_t i = 0; i < labels_.size(); ++i) {
    if (label_bins_[i] != bin) continue;
    if (!out.empty()) out += "|";
    out += labels_[i];
  }
  return out;
}

nlohmann::json FeatureBins::to_json() const {
  nlohmann::json out;
  out["feature"] = name_;
  out["kind"] = to_string(kind_);
  if (kind_ == Kind::continuous) {
    auto cuts = nlohmann::json::array();
    for (double c : cuts_) cuts.push_back(format_real(c));
    out["cuts"] = std::move(cuts);
  } else {
    out["labels"] = labels_;
    out["label_bins"] = label_bins_;
  }
  auto weights = nlohmann::json::array();
  for (double w : weights_) weights.push_back(format_real(w));
  out["weights"] = std::move(weights);
  return out;
}

FeatureBins FeatureBins::from_json(const nlohmann::json& json) {
  auto name = json.at("feature").get<std::string>();
  const Kind kind = parse_kind(json.at("kind").get<std::string>());
  std::vector<double> weights;
  for (const auto& w : json.at("weights")) weights.push_back(parse_real(w.get<std::string>()));
  if (kind == Kind::continuous) {
    std::vector<double> cuts;
    for (const auto& c : json.at("cuts")) cuts.push_back(parse_real(c.get<std::string>()));
    return continuous(std::move(name), std::move(cuts), std::move(weights));
  }
  return categorical(std::move(name), json.at("labels").get<std::vector<std::string>>(),
                     json.at("label_bins").get<std::vector<std::uint32_t>>(), std::move(weights));
}

// ---------------------------------------------------------------------------

namespace {

// Midpoint strictly above `lo` and not above `hi`, so `lo` falls in the lower
// bin and `hi` in the upper one under the right-closed convention.
double separating_cut(double lo, double hi) {
  const double mid = lo + (hi - lo) / 2.0;
  return (mid >= hi || mid < lo) ? lo : mid;
}

std::vector<double> count_weights(const FeatureBins& bins, const Column& column) {
  std::vector<double> weights(bins.bin_count(), 0.0);
  for (auto bin : bins.index_column(column)) {
    if (bin >= 0) weights[static_cast<std::size_t>(bin)] += 1.0;
  }
  return weights;
}

}  // namespace

std::vector<double> quantile_cuts(std::span<const double> values, std::size_t max_bins) {
  if (max_bins < 2) throw ValidationError("binning: max_bins must be at least 2 for continuous features");
  std::vector<double> sorted(values.begin(), values.end());
  for (double v : sorted) {
    if (!std::isfinite(v)) throw ValidationError("binning: non-finite value");
  }
  std::sort(sorted.begin(), sorted.end());
  // Distinct values and the number of observations at or below each boundary.
  std::vector<double> distinct;
  std::vector<std::size_t> cumulative;
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i + 1 == sorted.size() || sorted[i + 1] != sorted[i]) {
      distinct.push_back(sorted[i]);
      cumulative.push_back(i + 1);
    }
  }
  std::vector<double> cuts;
  if (distinct.size() <= 1) return cuts;
  const std::size_t candidates = distinct.size() - 1;
  if (distinct.size() <= max_bins) {
    for (std::size_t m = 0; m < candidates; ++m) cuts.push_back(separating_cut(distinct[m], distinct[m + 1]));
    return cuts;
  }
  const double n = static_cast<double>(sorted.size());
  const double k = static_cast<double>(max_bins);
  std::size_t previous = candidates;  // none chosen yet
  for (std::size_t i = 1; i < max_bins; ++i) {
    const double boundary = static_cast<double>(i) * n / k;
    // First candidate whose cumulative count reaches the boundary; compare
    // with its predecessor, ties go to the lower one.
    auto it = std::lower_bound(cumulative.begin(), cumulative.begin() + static_cast<std::ptrdiff_t>(candidates),
                               boundary, [](std::size_t c, double b) { return static_cast<double>(c) < b; });
    std::size_t m = static_cast<std::size_t>(it - cumulative.begin());
    if (m == candidates) {
      m = candidates - 1;
    } else if (m > 0) {
      const double below = boundary - static_cast<double>(cumulative[m - 1]);
      const double above = static_cast<double>(cumulative[m]) - boundary;
      if (below <= above) m = m - 1;
    }
    if (m == previous) continue;
    previous = m;
    cuts.push_back(separating_cut(distinct[m], distinct[m + 1]));
  }
  return cuts;
}

FeatureBins build_bins(const Column& column, std::size_t max_bins) {
  if (column.size() == 0) throw ValidationError("binning: empty column '" + column.name + "'");
  if (column.kind == Kind::continuous) {
    auto cuts = quantile_cuts(column.values, max_bins);
    const auto unweighted = FeatureBins::continuous(column.name, cuts, std::vector<double>(cuts.size() + 1, 0.0));
    return FeatureBins::continuous(column.name, std::move(cuts), count_weights(unweighted, column));
  }
  // Labels in first-appearance order within this column.
  std::vector<std::int32_t> order(column.labels.size(), -1);
  std::vector<std::string> labels;
  for (auto code : column.codes) {
    auto& slot = order[static_cast<std::size_t>(code)];
    if (slot < 0) {
      slot = static_cast<std::int32_t>(labels.size());
      labels.push_back(column.labels[static_cast<std::size_t>(code)]);
    }
  }
  std::vector<std::uint32_t> label_bins(labels.size());
  std::iota(label_bins.begin(), label_bins.end(), 0u);
  const auto unweighted =
      FeatureBins::categorical(column.name, labels, label_bins, std::vector<double>(labels.size(), 0.0));
  return FeatureBins::categorical(column.name, std::move(labels), std::move(label_bins),
                                  count_weights(unweighted, column));
}

FeatureBins build_bins(const Dataset& data, const std::string& feature, std::size_t max_bins) {
  return build_bins(data.column(feature), max_bins);
}

FeatureBins build_axis_bins(const Column& column, std::size_t max_bins) {
  FeatureBins full = build_bins(column, max_bins);
  if (full.kind() == Kind::continuous || full.bin_count() <= max_bins) return full;
  // Keep the (max_bins - 1) most frequent labels; stable on first appearance.
  std::vector<std::size_t> order(full.bin_count());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return full.weights()[a] > full.weights()[b]; });
  std::vector<std::uint32_t> label_bins(full.labels().size(), static_cast<std::uint32_t>(max_bins - 1));
  std::vector<bool> kept(full.bin_count(), false);
  for (std::size_t i = 0; i + 1 < max_bins; ++i) kept[order[i]] = true;
  std::uint32_t next = 0;
  for (std::size_t b = 0; b < full.bin_count(); ++b) {
    if (kept[b]) label_bins[b] = next++;
  }
  std::vector<double> weights(max_bins, 0.0);
  for (std::size_t b = 0; b < full.bin_count(); ++b) weights[label_bins[b]] += full.weights()[b];
  return FeatureBins::categorical(column.name, full.labels(), std::move(label_bins), std::move(weights));
}

PairBins build_pair_bins(const Dataset& data, std::size_t first, std::size_t second,
                         std::size_t max_interaction_bins) {
  if (first == second) throw ValidationError("pair bins: a pair needs two distinct features");
  PairBins out;
  out.first = first;
  out.second = second;
  out.rows = build_axis_bins(data.column(first), max_interaction_bins);
  out.cols = build_axis_bins(data.column(second), max_interaction_bins);
  out.weights.assign(out.cell_count(), 0.0);
  const auto r = out.rows.index_column(data.column(first));
  const auto c = out.cols.index_column(data.column(second));
  for (std::size_t i = 0; i < r.size(); ++i) {
    out.weights[out.cell(static_cast<std::size_t>(r[i]), static_cast<std::size_t>(c[i]))] += 1.0;
  }
  return out;
}

}  // namespace ebm
