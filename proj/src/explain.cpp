#include "ebm/explain.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <sstream>

#include "ebm/error.hpp"
#include "ebm/numfmt.hpp"
#include "ebm/trainer.hpp"

namespace ebm {

std::string to_string(ImportanceMethod method) {
  return method == ImportanceMethod::shape ? "shape" : "permutation";
}

ImportanceMethod parse_importance_method(const std::string& text) {
  if (text == "shape") return ImportanceMethod::shape;
  if (text == "permutation") return ImportanceMethod::permutation;
  throw ValidationError("unknown importance method '" + text + "' (expected shape or permutation)");
}

namespace {

void normalize(ImportanceReport& report, bool positive_only) {
  double total = 0.0;
  for (const auto& t : report.terms) total += positive_only ? std::max(0.0, t.importance) : t.importance;
  for (auto& t : report.terms) {
    const double v = positive_only ? std::max(0.0, t.importance) : t.importance;
    t.relative = total > 0.0 ? v / total : 0.0;
  }
}

double weighted_mean_abs(const std::vector<double>& scores, const std::vector<double>& weights) {
  double sw = 0.0;
  double swf = 0.0;
  for (std::size_t k = 0; k < scores.size(); ++k) {
    sw += weights[k];
    swf += weights[k] * std::abs(scores[k]);
  }
  return sw > 0.0 ? swf / sw : 0.0;
}

std::size_t data_feature(const Dataset& data, const std::string& name) {
  for (std::size_t j = 0; j < data.feature_count(); ++j) {
    if (data.column(j).name == name) return j;
  }
  throw ValidationError("data has no feature '" + name + "'");
}

std::size_t model_feature(const EbmModel& model, const std::string& name) {
  for (std::size_t j = 0; j < model.feature_count(); ++j) {
    if (model.feature_name(j) == name) return j;
  }
  throw ValidationError("unknown feature '" + name + "'");
}

std::vector<std::size_t> sample_rows(std::size_t n, std::size_t count, std::uint64_t seed) {
  std::vector<std::size_t> rows(n);
  std::iota(rows.begin(), rows.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(rows.begin(), rows.end(), rng);
  rows.resize(std::min(n, count));
  std::sort(rows.begin(), rows.end());
  return rows;
}

// Type-7 sample quantiles at k / (count - 1), duplicates removed.
std::vector<double> quantile_grid(std::vector<double> values, std::size_t count) {
  std::sort(values.begin(), values.end());
  std::vector<double> grid;
  for (std::size_t k = 0; k < count; ++k) {
    const double pos = static_cast<double>(k) * static_cast<double>(values.size() - 1) / static_cast<double>(count - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    const double q = frac == 0.0 ? values[lo] : values[lo] + frac * (values[hi] - values[lo]);
    if (grid.empty() || q > grid.back()) grid.push_back(q);
  }
  return grid;
}

double median_of(std::vector<double>& v) {
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 == 1 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

// Grid and ICE sample shared by both PDP routes.
PdpCurve pdp_frame(const EbmModel& model, const Dataset& data, const std::string& feature, std::size_t grid_size,
                   std::size_t ice_sample, std::uint64_t seed) {
  if (data.n_rows() == 0) throw ValidationError("pdp: empty data");
  const std::size_t j = model_feature(model, feature);
  const Column& column = data.column(data_feature(data, feature));
  const FeatureBins& bins = model.bins[j];
  if (column.kind != bins.kind()) throw ValidationError("pdp: feature '" + feature + "' has a different kind");
  PdpCurve curve;
  curve.feature = feature;
  curve.kind = bins.kind();
  if (bins.kind() == Kind::categorical) {
    curve.labels = bins.labels();
  } else if (grid_size == 0) {
    std::vector<std::vector<double>> members(bins.bin_count());
    for (double v : column.values) members[bins.index(v)].push_back(v);
    for (auto& m : members) {
      if (!m.empty()) curve.grid.push_back(median_of(m));
    }
  } else {
    if (grid_size < 2) throw ValidationError("pdp: grid_size must be at least 2");
    curve.grid = quantile_grid(column.values, grid_size);
  }
  curve.ice_rows = sample_rows(data.n_rows(), ice_sample, seed);
  const std::size_t points = curve.kind == Kind::categorical ? curve.labels.size() : curve.grid.size();
  curve.pd.assign(points, 0.0);
  curve.ice.assign(curve.ice_rows.size(), std::vector<double>(points, 0.0));
  return curve;
}

Column constant_column(const Column& like, const PdpCurve& curve, std::size_t g, std::size_t n) {
  Column out;
  out.name = like.name;
  out.kind = like.kind;
  if (like.kind == Kind::continuous) {
    out.values.assign(n, curve.grid[g]);
  } else {
    out.labels = {curve.labels[g]};
    out.codes.assign(n, 0);
  }
  return out;
}

}  // namespace

ImportanceReport term_importance(const EbmModel& model, const Dataset& data) {
  if (data.n_rows() == 0) throw ValidationError("term importance: empty data");
  const BinnedRows binned = bin_rows(model, data);
  ImportanceReport report;
  report.method = ImportanceMethod::shape;
  auto count = [&](const std::vector<std::int32_t>& index, std::size_t cells) {
    std::vector<double> w(cells, 0.0);
    for (auto b : index) {
      if (b >= 0) w[static_cast<std::size_t>(b)] += 1.0;
    }
    return w;
  };
  for (std::size_t t = 0; t < model.mains.size(); ++t) {
    const auto w = count(binned.mains[t], model.mains[t].scores.size());
    report.terms.push_back({model.term_name(t), weighted_mean_abs(model.mains[t].scores, w), 0.0});
  }
  for (std::size_t p = 0; p < model.pairs.size(); ++p) {
    const auto w = count(binned.pairs[p], model.pairs[p].scores.size());
    report.terms.push_back(
        {model.term_name(model.mains.size() + p), weighted_mean_abs(model.pairs[p].scores, w), 0.0});
  }
  normalize(report, false);
  return report;
}

ImportanceReport permutation_importance(const EbmModel& model, const Dataset& data, LossKind kind,
                                        std::uint64_t seed, std::size_t repeats) {
  if (data.n_rows() == 0) throw ValidationError("permutation importance: empty data");
  if (!data.has_target()) throw ValidationError("permutation importance needs targets");
  if (repeats == 0) throw ValidationError("permutation importance: repeats must be positive");
  const auto loss = [&](const Dataset& d) { return deviance(kind, d.target(), predict(model, d), d.exposure()); };
  const double base = loss(data);
  ImportanceReport report;
  report.method = ImportanceMethod::permutation;
  for (std::size_t j = 0; j < data.feature_count(); ++j) {
    const Column& column = data.column(j);
    double total = 0.0;
    for (std::size_t r = 0; r < repeats; ++r) {
      std::vector<std::size_t> order(data.n_rows());
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::mt19937_64 rng(derive_seed(seed, j, r));
      std::shuffle(order.begin(), order.end(), rng);
      Column permuted = column;
      for (std::size_t i = 0; i < order.size(); ++i) {
        if (column.kind == Kind::continuous) {
          permuted.values[i] = column.values[order[i]];
        } else {
          permuted.codes[i] = column.codes[order[i]];
        }
      }
      total += loss(data.with_column(j, std::move(permuted))) - base;
    }
    report.terms.push_back({column.name, total / static_cast<double>(repeats), 0.0});
  }
  normalize(report, true);
  return report;
}

PdpCurve pdp(const EbmModel& model, const Dataset& data, const std::string& feature, std::size_t grid_size,
             std::size_t ice_sample, std::uint64_t seed) {
  PdpCurve curve = pdp_frame(model, data, feature, grid_size, ice_sample, seed);
  const std::size_t j = model_feature(model, feature);
  const std::size_t n = data.n_rows();
  const BinnedRows binned = bin_rows(model, data);

  // Everything that does not involve j, summed in prediction order.
  std::vector<double> rest(n, model.intercept);
  std::vector<std::size_t> touching;
  for (std::size_t t = 0; t < model.mains.size(); ++t) {
    if (model.mains[t].feature == j) continue;
    const auto& table = model.mains[t].scores;
    for (std::size_t i = 0; i < n; ++i) {
      const auto b = binned.mains[t][i];
      rest[i] += b < 0 ? 0.0 : table[static_cast<std::size_t>(b)];
    }
  }
  for (std::size_t p = 0; p < model.pairs.size(); ++p) {
    const auto& pair = model.pairs[p];
    if (pair.first == j || pair.second == j) {
      touching.push_back(p);
      continue;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = binned.pairs[p][i];
      rest[i] += c < 0 ? 0.0 : pair.scores[static_cast<std::size_t>(c)];
    }
  }
  // Bin of the other feature of each touching pair, per row.
  std::vector<std::vector<std::int32_t>> partner;
  for (std::size_t p : touching) {
    const auto& pair = model.pairs[p];
    const bool j_is_row = pair.first == j;
    const std::size_t other = j_is_row ? pair.second : pair.first;
    const Column& col = data.column(data_feature(data, model.feature_name(other)));
    partner.push_back((j_is_row ? pair.cols : pair.rows).index_column(col));
  }

  auto bin_of = [&](const FeatureBins& bins, std::size_t g) -> std::optional<std::size_t> {
    if (curve.kind == Kind::continuous) return bins.index(curve.grid[g]);
    return bins.index(curve.labels[g]);
  };
  const auto& main_scores = model.mains[j].scores;
  const bool factorizes = uses_log_link(model.objective) && touching.empty();
  double mean_exp_rest = 0.0;
  if (factorizes) {
    for (double r : rest) mean_exp_rest += std::exp(r);
    mean_exp_rest /= static_cast<double>(n);
  }
  for (std::size_t g = 0; g < curve.size(); ++g) {
    const auto bj = bin_of(model.bins[j], g);
    const double fj = bj ? main_scores[*bj] : 0.0;
    if (factorizes) {
      curve.pd[g] = std::exp(fj) * mean_exp_rest;
      for (std::size_t s = 0; s < curve.ice_rows.size(); ++s) {
        curve.ice[s][g] = inverse_link(model.objective, rest[curve.ice_rows[s]] + fj);
      }
      continue;
    }
    std::vector<std::optional<std::size_t>> own;
    for (std::size_t p : touching) {
      const auto& pair = model.pairs[p];
      own.push_back(bin_of(pair.first == j ? pair.rows : pair.cols, g));
    }
    auto row_prediction = [&](std::size_t i) {
      double s = rest[i] + fj;
      for (std::size_t k = 0; k < touching.size(); ++k) {
        const auto& pair = model.pairs[touching[k]];
        const auto other = partner[k][i];
        if (!own[k] || other < 0) continue;
        const auto o = static_cast<std::size_t>(other);
        s += pair.first == j ? pair.scores[pair.cell(*own[k], o)] : pair.scores[pair.cell(o, *own[k])];
      }
      return inverse_link(model.objective, s);
    };
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += row_prediction(i);
    curve.pd[g] = sum / static_cast<double>(n);
    for (std::size_t s = 0; s < curve.ice_rows.size(); ++s) curve.ice[s][g] = row_prediction(curve.ice_rows[s]);
  }
  return curve;
}

PdpCurve pdp_brute_force(const EbmModel& model, const Dataset& data, const std::string& feature,
                         std::size_t grid_size, std::size_t ice_sample, std::uint64_t seed) {
  PdpCurve curve = pdp_frame(model, data, feature, grid_size, ice_sample, seed);
  const std::size_t dj = data_feature(data, feature);
  const std::size_t n = data.n_rows();
  for (std::size_t g = 0; g < curve.size(); ++g) {
    const auto preds = predict(model, data.with_column(dj, constant_column(data.column(dj), curve, g, n)));
    double sum = 0.0;
    for (double v : preds) sum += v;
    curve.pd[g] = sum / static_cast<double>(n);
    for (std::size_t s = 0; s < curve.ice_rows.size(); ++s) curve.ice[s][g] = preds[curve.ice_rows[s]];
  }
  return curve;
}

LocalExplanation local_explain(const EbmModel& model, const Dataset& data, std::size_t row) {
  TermScores scores = score_terms(model, data, row);
  LocalExplanation out;
  out.intercept = scores.intercept;
  out.score = scores.total();
  out.prediction = inverse_link(model.objective, out.score);
  out.terms = std::move(scores.terms);
  std::stable_sort(out.terms.begin(), out.terms.end(),
                   [](const TermContribution& a, const TermContribution& b) { return a.score > b.score; });
  return out;
}

ShapeExport export_shape(const EbmModel& model, const std::string& term) {
  const auto t = model.find_term(term);
  if (!t) throw ValidationError("unknown term '" + term + "'");
  ShapeExport out;
  out.term = model.term_name(*t);
  if (*t < model.mains.size()) {
    const MainTerm& main = model.mains[*t];
    const FeatureBins& bins = model.bins[main.feature];
    for (std::size_t k = 0; k < main.scores.size(); ++k) {
      out.records.push_back({k, 0, bins.describe(k), "", main.scores[k], main.stderrs[k], bins.weights()[k]});
    }
    return out;
  }
  const PairTerm& pair = model.pairs[*t - model.mains.size()];
  out.pair = true;
  for (std::size_t r = 0; r < pair.rows.bin_count(); ++r) {
    for (std::size_t c = 0; c < pair.cols.bin_count(); ++c) {
      const std::size_t cell = pair.cell(r, c);
      out.records.push_back({r, c, pair.rows.describe(r), pair.cols.describe(c), pair.scores[cell],
                             pair.stderrs[cell], pair.weights[cell]});
    }
  }
  return out;
}

Direction parse_direction(const std::string& text) {
  if (text == "inc" || text == "increasing") return Direction::increasing;
  if (text == "dec" || text == "decreasing") return Direction::decreasing;
  throw ValidationError("unknown direction '" + text + "' (expected inc or dec)");
}

std::vector<double> isotonic_fit(std::span<const double> values, std::span<const double> weights,
                                 Direction direction) {
  if (values.size() != weights.size()) throw ValidationError("isotonic fit: length mismatch");
  const double sign = direction == Direction::increasing ? 1.0 : -1.0;
  struct Block {
    double mean;
    double weight;
    std::size_t end;  // one past the last positive-weight index it covers
  };
  std::vector<std::size_t> active;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (weights[k] < 0.0) throw ValidationError("isotonic fit: negative weight");
    if (weights[k] > 0.0) active.push_back(k);
  }
  std::vector<double> w(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) w[k] = weights[k];
  if (active.empty()) {
    // No weights at all: treat every entry alike.
    active.resize(values.size());
    std::iota(active.begin(), active.end(), std::size_t{0});
    std::fill(w.begin(), w.end(), 1.0);
  }
  std::vector<Block> stack;
  for (std::size_t a = 0; a < active.size(); ++a) {
    const std::size_t k = active[a];
    Block block{sign * values[k], w[k], a + 1};
    while (!stack.empty() && stack.back().mean >= block.mean) {
      const Block& prev = stack.back();
      const double total = prev.weight + block.weight;
      block.mean = (prev.weight * prev.mean + block.weight * block.mean) / total;
      block.weight = total;
      stack.pop_back();
    }
    stack.push_back(block);
  }
  std::vector<double> fitted_active(active.size());
  std::size_t start = 0;
  for (const Block& block : stack) {
    for (std::size_t a = start; a < block.end; ++a) fitted_active[a] = sign * block.mean;
    start = block.end;
  }
  std::vector<double> out(values.size());
  std::size_t a = 0;
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (a < active.size() && active[a] == k) {
      out[k] = fitted_active[a++];
    } else {
      out[k] = a == 0 ? fitted_active.front() : fitted_active[a - 1];
    }
  }
  return out;
}

EbmModel monotonize(const EbmModel& model, const std::string& feature, Direction direction) {
  const std::size_t j = model_feature(model, feature);
  if (model.bins[j].kind() != Kind::continuous) {
    throw ValidationError("monotonize: feature '" + feature + "' is categorical");
  }
  EbmModel out = model;
  MainTerm& main = out.mains[j];
  const auto& weights = out.bins[j].weights();
  main.scores = isotonic_fit(main.scores, weights, direction);
  double sw = 0.0;
  double swf = 0.0;
  for (std::size_t k = 0; k < main.scores.size(); ++k) {
    sw += weights[k];
    swf += weights[k] * main.scores[k];
  }
  if (sw > 0.0) {
    const double shift = swf / sw;
    for (double& s : main.scores) s -= shift;
    out.intercept += shift;
  }
  return out;
}

std::string importance_to_csv(const ImportanceReport& report) {
  std::ostringstream out;
  out << "term,importance,relative_importance,method\n";
  for (const auto& t : report.terms) {
    out << csv_escape(t.term) << ',' << format_real(t.importance) << ',' << format_real(t.relative) << ','
        << to_string(report.method) << '\n';
  }
  return out.str();
}

std::string pdp_to_csv(const PdpCurve& curve) {
  std::ostringstream out;
  out << "x,pd";
  for (std::size_t s = 0; s < curve.ice_rows.size(); ++s) out << ",ice_" << (s + 1);
  out << '\n';
  for (std::size_t g = 0; g < curve.size(); ++g) {
    out << (curve.kind == Kind::continuous ? format_real(curve.grid[g]) : csv_escape(curve.labels[g])) << ','
        << format_real(curve.pd[g]);
    for (const auto& ice : curve.ice) out << ',' << format_real(ice[g]);
    out << '\n';
  }
  return out.str();
}

std::string local_to_csv(const LocalExplanation& explanation) {
  std::ostringstream out;
  out << "term,score\n";
  out << "intercept," << format_real(explanation.intercept) << '\n';
  for (const auto& t : explanation.terms) out << csv_escape(t.name) << ',' << format_real(t.score) << '\n';
  out << "total_score," << format_real(explanation.score) << '\n';
  out << "prediction," << format_real(explanation.prediction) << '\n';
  return out.str();
}

std::string shape_to_csv(const ShapeExport& shape) {
  std::ostringstream out;
  if (shape.pair) {
    out << "row_index,col_index,row_bin,col_bin,score,stderr,weight\n";
  } else {
    out << "index,bin,score,stderr,weight\n";
  }
  for (const auto& r : shape.records) {
    out << r.row << ',';
    if (shape.pair) out << r.col << ',';
    out << csv_escape(r.row_label) << ',';
    if (shape.pair) out << csv_escape(r.col_label) << ',';
    out << format_real(r.score) << ',' << format_real(r.stderr_value) << ',' << format_real(r.weight) << '\n';
  }
  return out.str();
}

}  // namespace ebm
