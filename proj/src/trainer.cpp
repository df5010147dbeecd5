#include "ebm/trainer.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <random>
#include <thread>

#include "ebm/error.hpp"
#include "ebm/interactions.hpp"
#include "ebm/shape_tree.hpp"

namespace ebm {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  auto mix = [](std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ a) ^ (b * 0xD6E8FEB86659FD93ull));
}

namespace {

// A term as seen by the booster: a flat cell axis plus the cell of every row.
struct BoostTerm {
  std::size_t cells = 0;
  bool pair = false;
  bool ordinal = true;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint32_t> cell_of_row;
};

struct BoostSettings {
  LossKind kind = LossKind::squared_error;
  double learning_rate = 0.01;
  std::size_t max_rounds = 0;
  std::size_t smoothing_rounds = 0;
  std::size_t early_stopping_rounds = 0;
  double early_stopping_tolerance = 0.0;
  std::size_t inner_bags = 0;
  TreeParams tree;
  bool record_training = false;
};

struct Partition {
  std::vector<std::size_t> train;
  std::vector<std::size_t> valid;
};

struct BagOutput {
  std::vector<std::vector<double>> scores;
  BagRecord record;
};

// Rows of one side of a bag (training or validation), laid out contiguously.
// `state` carries the loss-specific running quantity updated multiplicatively
// so the hot loops never call exp: Poisson mu, gamma y/mu, squared F.
struct RowBlock {
  std::size_t n = 0;
  std::vector<double> y;
  std::vector<double> score;
  std::vector<double> state;
  std::vector<std::vector<std::uint32_t>> cells;  // per term
  double deviance_constant = 0.0;
};

RowBlock make_block(LossKind kind, std::span<const BoostTerm> terms, std::span<const double> y,
                    std::span<const double> init_score, std::span<const std::size_t> rows) {
  RowBlock block;
  block.n = rows.size();
  block.y.reserve(rows.size());
  block.score.reserve(rows.size());
  block.state.reserve(rows.size());
  for (std::size_t r : rows) {
    const double yi = y[r];
    const double s = init_score[r];
    block.y.push_back(yi);
    block.score.push_back(s);
    switch (kind) {
      case LossKind::poisson_deviance:
        block.state.push_back(std::exp(s));
        block.deviance_constant += (yi > 0.0 ? yi * std::log(yi) : 0.0) - yi;
        break;
      case LossKind::gamma_deviance:
        block.state.push_back(yi / std::exp(s));
        block.deviance_constant += -1.0 - std::log(yi);
        break;
      case LossKind::squared_error: block.state.push_back(s); break;
    }
  }
  block.cells.resize(terms.size());
  for (std::size_t t = 0; t < terms.size(); ++t) {
    block.cells[t].reserve(rows.size());
    for (std::size_t r : rows) block.cells[t].push_back(terms[t].cell_of_row[r]);
  }
  return block;
}

double block_deviance(LossKind kind, const RowBlock& block) {
  if (block.n == 0) return 0.0;
  double total = 0.0;
  switch (kind) {
    case LossKind::poisson_deviance:
      for (std::size_t i = 0; i < block.n; ++i) total += block.state[i] - block.y[i] * block.score[i];
      total = 2.0 * (block.deviance_constant + total);
      break;
    case LossKind::gamma_deviance:
      for (std::size_t i = 0; i < block.n; ++i) total += block.state[i] + block.score[i];
      total = 2.0 * (block.deviance_constant + total);
      break;
    case LossKind::squared_error:
      for (std::size_t i = 0; i < block.n; ++i) {
        const double r = block.y[i] - block.state[i];
        total += r * r;
      }
      break;
  }
  return total / static_cast<double>(block.n);
}

class BagBooster {
 public:
  BagBooster(const BoostSettings& settings, std::span<const BoostTerm> terms, std::span<const double> y,
             std::span<const double> init_score, const Partition& partition, std::uint64_t tree_seed,
             std::uint64_t inner_seed)
      : settings_(settings),
        terms_(terms),
        train_(make_block(settings.kind, terms, y, init_score, partition.train)),
        valid_(make_block(settings.kind, terms, y, init_score, partition.valid)),
        tree_rng_(tree_seed),
        inner_rng_(inner_seed) {
    scores_.resize(terms.size());
    sum_y_.resize(terms.size());
    counts_.resize(terms.size());
    for (std::size_t t = 0; t < terms.size(); ++t) {
      scores_[t].assign(terms[t].cells, 0.0);
      sum_y_[t].assign(terms[t].cells, 0.0);
      counts_[t].assign(terms[t].cells, 0.0);
      for (std::size_t i = 0; i < train_.n; ++i) {
        sum_y_[t][train_.cells[t][i]] += train_.y[i];
        counts_[t][train_.cells[t][i]] += 1.0;
      }
    }
  }

  BagOutput run() {
    BagOutput out;
    const bool has_valid = valid_.n > 0;
    const bool early_stopping = has_valid && settings_.early_stopping_rounds > 0;
    double best = has_valid ? block_deviance(settings_.kind, valid_) : 0.0;
    out.record.validation_curve.push_back(best);
    if (settings_.record_training) out.record.training_curve.push_back(block_deviance(settings_.kind, train_));
    std::vector<std::vector<double>> best_scores = scores_;
    std::size_t best_round = 0;
    std::size_t round = 0;

    std::vector<double> acc;
    std::vector<double> next_acc;
    if (settings_.inner_bags == 0 && !terms_.empty()) accumulate(0, acc);

    while (round < settings_.max_rounds && !terms_.empty()) {
      ++round;
      const SplitMode mode = round <= settings_.smoothing_rounds ? SplitMode::random : SplitMode::greedy;
      for (std::size_t t = 0; t < terms_.size(); ++t) {
        std::vector<double> delta;
        if (settings_.inner_bags == 0) {
          delta = step_deltas(t, stats_from(t, acc, sum_y_[t], counts_[t]), mode);
        } else {
          delta = inner_bag_deltas(t, mode);
        }
        for (std::size_t c = 0; c < delta.size(); ++c) scores_[t][c] += delta[c];
        const std::size_t next = (t + 1) % terms_.size();
        apply(train_, t, delta, settings_.inner_bags == 0 ? &next_acc : nullptr, next);
        apply(valid_, t, delta, nullptr, next);
        std::swap(acc, next_acc);
      }
      const double valid_dev = has_valid ? block_deviance(settings_.kind, valid_) : 0.0;
      if (!std::isfinite(valid_dev)) throw NumericError("non-finite score during boosting");
      out.record.validation_curve.push_back(valid_dev);
      if (settings_.record_training) out.record.training_curve.push_back(block_deviance(settings_.kind, train_));
      if (early_stopping) {
        // Tolerance is relative to the best deviance so far.
        if (valid_dev < best - settings_.early_stopping_tolerance * std::abs(best)) {
          best = valid_dev;
          best_round = round;
          best_scores = scores_;
        } else if (round - best_round >= settings_.early_stopping_rounds) {
          break;
        }
      }
    }
    out.record.stop_round = round;
    if (early_stopping) {
      out.scores = std::move(best_scores);
      out.record.best_round = best_round;
      out.record.best_validation_deviance = best;
    } else {
      out.scores = scores_;
      out.record.best_round = round;
      out.record.best_validation_deviance = out.record.validation_curve.back();
    }
    return out;
  }

 private:
  // Per-cell sums of the running state for term t over the training rows.
  void accumulate(std::size_t t, std::vector<double>& acc) const {
    acc.assign(terms_[t].cells, 0.0);
    const auto& cells = train_.cells[t];
    for (std::size_t i = 0; i < train_.n; ++i) acc[cells[i]] += train_.state[i];
  }

  std::vector<BinStats> stats_from(std::size_t t, const std::vector<double>& acc, const std::vector<double>& sum_y,
                                   const std::vector<double>& counts) const {
    std::vector<BinStats> stats(terms_[t].cells);
    for (std::size_t c = 0; c < stats.size(); ++c) {
      const double a = acc[c];
      if (!std::isfinite(a)) throw NumericError("score overflow during boosting");
      switch (settings_.kind) {
        case LossKind::poisson_deviance: stats[c] = {sum_y[c] - a, a, counts[c]}; break;
        case LossKind::gamma_deviance: stats[c] = {a - counts[c], a, counts[c]}; break;
        case LossKind::squared_error: stats[c] = {sum_y[c] - a, counts[c], counts[c]}; break;
      }
    }
    return stats;
  }

  std::vector<double> step_deltas(std::size_t t, const std::vector<BinStats>& stats, SplitMode mode) {
    const BoostTerm& term = terms_[t];
    const TreeUpdate update =
        term.pair ? fit_pair_tree(settings_.kind, stats, term.rows, term.cols, settings_.tree, mode, &tree_rng_)
                  : fit_feature_tree(settings_.kind, stats, settings_.tree, mode, term.ordinal, &tree_rng_);
    std::vector<double> delta(term.cells);
    for (std::size_t c = 0; c < term.cells; ++c) delta[c] = settings_.learning_rate * update.delta(c);
    return delta;
  }

  // Averages the updates fitted on bootstrap resamples of the training rows.
  std::vector<double> inner_bag_deltas(std::size_t t, SplitMode mode) {
    const std::size_t cells = terms_[t].cells;
    std::vector<double> total(cells, 0.0);
    std::uniform_int_distribution<std::size_t> draw(0, train_.n == 0 ? 0 : train_.n - 1);
    std::vector<double> weight(train_.n);
    for (std::size_t b = 0; b < settings_.inner_bags; ++b) {
      std::fill(weight.begin(), weight.end(), 0.0);
      for (std::size_t i = 0; i < train_.n; ++i) weight[draw(inner_rng_)] += 1.0;
      std::vector<double> acc(cells, 0.0);
      std::vector<double> sum_y(cells, 0.0);
      std::vector<double> counts(cells, 0.0);
      const auto& cell = train_.cells[t];
      for (std::size_t i = 0; i < train_.n; ++i) {
        acc[cell[i]] += weight[i] * train_.state[i];
        sum_y[cell[i]] += weight[i] * train_.y[i];
        counts[cell[i]] += weight[i];
      }
      const auto delta = step_deltas(t, stats_from(t, acc, sum_y, counts), mode);
      for (std::size_t c = 0; c < cells; ++c) total[c] += delta[c];
    }
    for (double& d : total) d /= static_cast<double>(settings_.inner_bags);
    return total;
  }

  // Adds the term-t update to every row; optionally accumulates the next
  // term's cell sums in the same pass.
  void apply(RowBlock& block, std::size_t t, const std::vector<double>& delta, std::vector<double>* next_acc,
             std::size_t next) const {
    std::vector<double> factor(delta.size());
    for (std::size_t c = 0; c < delta.size(); ++c) {
      switch (settings_.kind) {
        case LossKind::poisson_deviance: factor[c] = std::exp(delta[c]); break;
        case LossKind::gamma_deviance: factor[c] = std::exp(-delta[c]); break;
        case LossKind::squared_error: factor[c] = delta[c]; break;
      }
    }
    const auto& cells = block.cells[t];
    double* score = block.score.data();
    double* state = block.state.data();
    const bool additive = settings_.kind == LossKind::squared_error;
    if (next_acc == nullptr) {
      for (std::size_t i = 0; i < block.n; ++i) {
        const auto c = cells[i];
        score[i] += delta[c];
        state[i] = additive ? state[i] + factor[c] : state[i] * factor[c];
      }
      return;
    }
    next_acc->assign(terms_[next].cells, 0.0);
    double* acc = next_acc->data();
    const auto& next_cells = block.cells[next];
    if (additive) {
      for (std::size_t i = 0; i < block.n; ++i) {
        const auto c = cells[i];
        score[i] += delta[c];
        state[i] += factor[c];
        acc[next_cells[i]] += state[i];
      }
    } else {
      for (std::size_t i = 0; i < block.n; ++i) {
        const auto c = cells[i];
        score[i] += delta[c];
        state[i] *= factor[c];
        acc[next_cells[i]] += state[i];
      }
    }
  }

  const BoostSettings& settings_;
  std::span<const BoostTerm> terms_;
  RowBlock train_;
  RowBlock valid_;
  std::mt19937_64 tree_rng_;
  std::mt19937_64 inner_rng_;
  std::vector<std::vector<double>> scores_;
  std::vector<std::vector<double>> sum_y_;
  std::vector<std::vector<double>> counts_;
};

// Runs f(0..n-1) on up to `threads` workers; rethrows the first failure in
// index order.
template <typename F>
void parallel_for(std::size_t n, std::size_t threads, F&& f) {
  if (threads == 0) threads = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  std::vector<std::exception_ptr> errors(n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        f(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> workers;
    for (std::size_t w = 0; w < threads; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            f(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<Partition> make_partitions(std::size_t n, const TrainConfig& config) {
  std::vector<Partition> out(config.outer_bags);
  const auto n_valid = static_cast<std::size_t>(std::llround(config.validation_size * static_cast<double>(n)));
  if (n_valid >= n) throw ValidationError("validation_size leaves no training rows");
  for (std::size_t b = 0; b < config.outer_bags; ++b) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(derive_seed(config.seed, 1, b));
    std::shuffle(order.begin(), order.end(), rng);
    out[b].valid.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_valid));
    out[b].train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_valid), order.end());
    std::sort(out[b].valid.begin(), out[b].valid.end());
    std::sort(out[b].train.begin(), out[b].train.end());
  }
  return out;
}

struct BaggedTerms {
  std::vector<std::vector<double>> mean;
  std::vector<std::vector<double>> stderrs;
  std::vector<BagRecord> records;
};

BaggedTerms run_bags(const BoostSettings& settings, std::span<const BoostTerm> terms, std::span<const double> y,
                     std::span<const double> init_score, const std::vector<Partition>& partitions,
                     std::uint64_t seed, std::uint64_t phase, std::size_t threads) {
  const std::size_t bags = partitions.size();
  std::vector<BagOutput> outputs(bags);
  parallel_for(bags, threads, [&](std::size_t b) {
    BagBooster booster(settings, terms, y, init_score, partitions[b], derive_seed(seed, phase, b),
                       derive_seed(seed, phase + 100, b));
    outputs[b] = booster.run();
  });
  BaggedTerms out;
  for (std::size_t t = 0; t < terms.size(); ++t) {
    std::vector<double> mean(terms[t].cells, 0.0);
    std::vector<double> sd(terms[t].cells, 0.0);
    for (std::size_t c = 0; c < mean.size(); ++c) {
      double sum = 0.0;
      for (const auto& o : outputs) sum += o.scores[t][c];
      mean[c] = sum / static_cast<double>(bags);
      if (bags > 1) {
        double ss = 0.0;
        for (const auto& o : outputs) ss += (o.scores[t][c] - mean[c]) * (o.scores[t][c] - mean[c]);
        sd[c] = std::sqrt(ss / static_cast<double>(bags - 1));
      }
    }
    out.mean.push_back(std::move(mean));
    out.stderrs.push_back(std::move(sd));
  }
  for (auto& o : outputs) out.records.push_back(std::move(o.record));
  return out;
}

std::vector<std::uint32_t> to_cells(const std::vector<std::int32_t>& index) {
  std::vector<std::uint32_t> out(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0) throw ValidationError("training data contains a value outside its own bins");
    out[i] = static_cast<std::uint32_t>(index[i]);
  }
  return out;
}

Dataset drop_excluded(const Dataset& data, const std::vector<std::string>& exclude) {
  if (exclude.empty()) return data;
  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < data.feature_count(); ++j) {
    const auto& name = data.column(j).name;
    if (std::find(exclude.begin(), exclude.end(), name) == exclude.end()) keep.push_back(j);
  }
  for (const auto& name : exclude) {
    if (!data.schema().feature_index(name)) throw ValidationError("config: excluded feature '" + name + "' is unknown");
  }
  std::vector<SchemaEntry> entries;
  std::vector<Column> columns;
  const auto features = data.schema().features();
  for (std::size_t j : keep) {
    entries.push_back(features[j]);
    columns.push_back(data.column(j));
  }
  for (const auto& entry : data.schema().entries()) {
    if (entry.role != Role::feature) entries.push_back(entry);
  }
  std::vector<double> target(data.target().begin(), data.target().end());
  std::vector<double> exposure(data.exposure().begin(), data.exposure().end());
  return Dataset(FeatureSchema(std::move(entries)), std::move(columns), std::move(target), std::move(exposure));
}

}  // namespace

EbmModel train(const Dataset& input, const TrainConfig& config, const TrainOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  config.validate();
  if (!input.has_target()) throw ValidationError("training data has no target column");
  if (input.n_rows() < 2) throw ValidationError("training needs at least 2 rows");
  if (input.has_exposure_column() && config.objective != LossKind::poisson_deviance) {
    throw ValidationError("an exposure column is only allowed with the poisson_deviance objective");
  }
  const Dataset data = drop_excluded(input, config.exclude);
  const LossKind kind = config.objective;
  check_targets(kind, data.target());

  EbmModel model;
  model.schema = data.schema();
  model.objective = kind;
  model.config = config;
  model.meta.n_train = data.n_rows();
  const std::size_t n = data.n_rows();
  const std::size_t p = data.feature_count();

  std::vector<BoostTerm> mains(p);
  for (std::size_t j = 0; j < p; ++j) {
    model.bins.push_back(build_bins(data.column(j), config.max_bins));
    mains[j].cells = model.bins[j].bin_count();
    mains[j].ordinal = model.bins[j].kind() == Kind::continuous;
    mains[j].cell_of_row = to_cells(model.bins[j].index_column(data.column(j)));
  }

  const Intercept intercept = init_intercept(kind, data.target(), data.exposure());
  model.intercept = intercept.score;
  std::vector<double> offset(n, 0.0);
  if (kind == LossKind::poisson_deviance) {
    for (std::size_t i = 0; i < n; ++i) offset[i] = std::log(data.exposure()[i]);
  }
  std::vector<double> init_score(n);
  for (std::size_t i = 0; i < n; ++i) init_score[i] = intercept.score + offset[i];

  BoostSettings settings;
  settings.kind = kind;
  settings.learning_rate = config.learning_rate;
  settings.max_rounds = config.max_rounds;
  settings.smoothing_rounds = config.smoothing_rounds;
  settings.early_stopping_rounds = config.early_stopping_rounds;
  settings.early_stopping_tolerance = config.early_stopping_tolerance;
  settings.inner_bags = config.inner_bags;
  settings.tree.max_leaves = config.max_leaves;
  settings.tree.min_samples_leaf = static_cast<double>(config.min_samples_leaf);
  settings.tree.min_hessian = config.min_hessian;
  settings.tree.gamma_floor = config.gamma_floor;
  settings.record_training = options.record_training_deviance;

  const auto partitions = make_partitions(n, config);
  auto main_result = run_bags(settings, mains, data.target(), init_score, partitions, config.seed, 2, options.threads);
  for (std::size_t j = 0; j < p; ++j) {
    model.mains.push_back({j, std::move(main_result.mean[j]), std::move(main_result.stderrs[j])});
  }
  model.meta.main_bags = std::move(main_result.records);
  center_terms(model);

  const bool wants_pairs =
      config.max_rounds > 0 && p >= 2 &&
      !(config.interactions.mode != InteractionSpec::Mode::explicit_pairs && config.interactions.value == 0.0) &&
      !(config.interactions.mode == InteractionSpec::Mode::explicit_pairs && config.interactions.pairs.empty());
  if (wants_pairs) {
    if (config.interactions.mode != InteractionSpec::Mode::explicit_pairs) {
      model.meta.ranked_pairs = fast_rank(data, model);
    }
    const auto chosen = resolve_interaction_spec(config.interactions, model.schema, model.meta.ranked_pairs);
    if (!chosen.empty()) {
      std::vector<BoostTerm> pair_terms;
      std::vector<PairBins> pair_bins;
      for (const auto& [a, b] : chosen) {
        pair_bins.push_back(build_pair_bins(data, a, b, config.max_interaction_bins));
        const PairBins& pb = pair_bins.back();
        BoostTerm term;
        term.pair = true;
        term.rows = pb.rows.bin_count();
        term.cols = pb.cols.bin_count();
        term.cells = pb.cell_count();
        const auto r = pb.rows.index_column(data.column(a));
        const auto c = pb.cols.index_column(data.column(b));
        term.cell_of_row.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
          term.cell_of_row[i] =
              static_cast<std::uint32_t>(pb.cell(static_cast<std::size_t>(r[i]), static_cast<std::size_t>(c[i])));
        }
        pair_terms.push_back(std::move(term));
      }
      std::vector<double> pair_init = predict_scores(model, data);
      for (std::size_t i = 0; i < n; ++i) pair_init[i] += offset[i];
      BoostSettings pair_settings = settings;
      pair_settings.smoothing_rounds = config.interaction_smoothing_rounds;
      auto pair_result =
          run_bags(pair_settings, pair_terms, data.target(), pair_init, partitions, config.seed, 3, options.threads);
      for (std::size_t k = 0; k < chosen.size(); ++k) {
        PairTerm term;
        term.first = chosen[k].first;
        term.second = chosen[k].second;
        term.rows = std::move(pair_bins[k].rows);
        term.cols = std::move(pair_bins[k].cols);
        term.weights = std::move(pair_bins[k].weights);
        term.scores = std::move(pair_result.mean[k]);
        term.stderrs = std::move(pair_result.stderrs[k]);
        model.pairs.push_back(std::move(term));
      }
      model.meta.pair_bags = std::move(pair_result.records);
      center_terms(model);
    }
  }
  model.meta.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return model;
}

}  // namespace ebm
