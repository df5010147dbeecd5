// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "cli.hpp"
#include "ebm/explain.hpp"
#include "ebm/interactions.hpp"
#include "ebm/loss.hpp"
#include "ebm/metrics.hpp"
#include "ebm/synth.hpp"
#include "ebm/trainer.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace ebm;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void check(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

SynthFeature step_feature(const std::string& name, double low, double high, std::vector<double> cuts,
                          std::vector<double> values) {
  SynthFeature f;
  f.name = name;
  f.low = low;
  f.high = high;
  f.shape = ShapeKind::step;
  f.cuts = std::move(cuts);
  f.values = std::move(values);
  return f;
}

SynthFeature linear_feature(const std::string& name, double slope) {
  SynthFeature f;
  f.name = name;
  f.shape = ShapeKind::linear;
  f.slope = slope;
  return f;
}

SynthFeature categorical_feature(const std::string& name, std::vector<std::string> levels, std::vector<double> probs,
                                 std::vector<double> effects) {
  SynthFeature f;
  f.name = name;
  f.kind = Kind::categorical;
  f.levels = std::move(levels);
  f.probs = std::move(probs);
  f.effects = std::move(effects);
  return f;
}

// Four continuous features with step shapes.
SynthSpec step_spec(std::size_t n, std::uint64_t seed) {
  SynthSpec spec;
  spec.kind = SynthKind::frequency;
  spec.n_rows = n;
  spec.seed = seed;
  spec.intercept = 0.0;
  spec.features = {
      step_feature("s1", 0.0, 1.0, {0.3, 0.7}, {0.3, 0.0, -0.2}),
      step_feature("s2", 0.0, 10.0, {5.0}, {-0.15, 0.15}),
      step_feature("s3", 18.0, 80.0, {25.0, 40.0, 65.0}, {0.4, 0.1, 0.0, 0.25}),
      step_feature("s4", -1.0, 1.0, {-0.5, 0.0, 0.5}, {0.0, 0.1, 0.2, 0.3}),
  };
  return spec;
}

std::vector<double> expected_counts(const Dataset& data, const std::vector<double>& rates) {
  std::vector<double> out(rates.size());
  for (std::size_t i = 0; i < rates.size(); ++i) out[i] = data.exposure()[i] * rates[i];
  return out;
}

std::vector<double> exp_all(const std::vector<double>& scores) {
  std::vector<double> out(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) out[i] = std::exp(scores[i]);
  return out;
}

// 1. Deviance examples and derivative checks.
Outcome loss_correctness() {
  Outcome o;
  const auto start = Clock::now();
  auto single = [](LossKind kind, double y, double mu) {
    const double yy[] = {y};
    const double mm[] = {mu};
    return deviance(kind, yy, mm);
  };
  const double pois = single(LossKind::poisson_deviance, 2.0, 1.0);
  const double gam = single(LossKind::gamma_deviance, 2.0, 1.0);
  o.check(std::abs(pois - 2.0 * (2.0 * std::log(2.0) - 1.0)) <= 1e-10, "poisson example");
  o.check(std::abs(gam - 2.0 * (1.0 - std::log(2.0))) <= 1e-10, "gamma example");
  o.check(std::abs(single(LossKind::poisson_deviance, 3.0, 3.0)) <= 1e-10, "poisson perfect fit");

  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> score(-2.0, 2.0);
  std::uniform_real_distribution<double> target(0.1, 5.0);
  double worst_grad = 0.0;
  double worst_hess = 0.0;
  for (auto kind : {LossKind::poisson_deviance, LossKind::gamma_deviance, LossKind::squared_error}) {
    for (int i = 0; i < 100; ++i) {
      const double y = kind == LossKind::poisson_deviance ? std::floor(target(rng)) : target(rng);
      const double s = score(rng);
      auto d = [&](double x) { return single(kind, y, inverse_link(kind, x)); };
      const double yv[] = {y};
      const double sv[] = {s};
      const double r = pseudo_residuals(kind, yv, sv)[0];
      const double h = hessians(kind, yv, sv)[0];
      const double fd_r = -0.5 * testing::central_difference(d, s, 1e-6);
      const double fd_h = 0.5 * testing::second_difference(d, s, 1e-3);
      worst_grad = std::max(worst_grad, std::abs(r - fd_r) / std::max(1.0, std::abs(r)));
      worst_hess = std::max(worst_hess, std::abs(h - fd_h) / std::max(1.0, std::abs(h)));
    }
  }
  o.check(worst_grad <= 1e-5, "gradient finite differences");
  o.check(worst_hess <= 1e-5, "hessian finite differences");
  const double elapsed = seconds_since(start);
  o.check(elapsed < 1.0, "runtime");
  o.detail << "poisson=" << pois << " gamma=" << gam << " max_rel_err_grad=" << worst_grad
           << " max_rel_err_hess=" << worst_hess << " time=" << elapsed << "s";
  return o;
}

// 2. Shape, intercept and EDR recovery on step-shaped frequency data.
Outcome oracle_recovery() {
  Outcome o;
  const auto start = Clock::now();
  const auto train_set = synth_generate(step_spec(100000, 11));
  const auto test_set = synth_generate(step_spec(100000, 12));
  TrainConfig config;
  config.objective = LossKind::poisson_deviance;
  const EbmModel model = train(train_set.data, config);

  const auto binned = bin_rows(model, train_set.data);
  double worst = 0.0;
  o.detail << "shape_rms=[";
  for (std::size_t j = 0; j < model.mains.size(); ++j) {
    const auto truth = true_shape(train_set.truth, train_set.data, model.feature_name(j));
    double sse = 0.0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const double err = model.mains[j].scores[static_cast<std::size_t>(binned.mains[j][i])] - truth[i];
      sse += err * err;
    }
    const double rms = std::sqrt(sse / static_cast<double>(truth.size()));
    worst = std::max(worst, rms);
    o.detail << (j ? " " : "") << rms;
  }
  o.detail << "] ";
  const double b0_err = std::abs(model.intercept - train_set.truth.intercept);

  const auto rates = predict(model, test_set.data);
  const double model_edr = edr(LossKind::poisson_deviance, test_set.data.target(), rates, test_set.data.exposure());
  const double true_edr = edr(LossKind::poisson_deviance, test_set.data.target(),
                              exp_all(true_scores(test_set.truth, test_set.data)), test_set.data.exposure());
  const double elapsed = seconds_since(start);
  o.check(worst <= 0.05, "shape error");
  o.check(b0_err <= 0.02, "intercept");
  o.check(std::abs(model_edr - true_edr) <= 0.01, "edr");
  o.check(elapsed < 120.0, "runtime");
  o.detail << "intercept_err=" << b0_err << " edr=" << model_edr << " true_edr=" << true_edr << " time=" << elapsed
           << "s";
  return o;
}

// 3. Training deviance is non-increasing after the smoothing rounds.
Outcome monotone_descent() {
  Outcome o;
  std::size_t checked = 0;
  double worst = -INFINITY;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SynthSpec spec = SynthSpec::default_spec(seed % 2 == 0 ? SynthKind::frequency : SynthKind::severity);
    spec.n_rows = 5000;
    spec.seed = 100 + seed;
    const auto synth = synth_generate(spec);
    TrainConfig config;
    config.objective = spec.kind == SynthKind::frequency ? LossKind::poisson_deviance : LossKind::gamma_deviance;
    config.outer_bags = 2;
    config.seed = seed;
    TrainOptions options;
    options.record_training_deviance = true;
    const EbmModel model = train(synth.data, config, options);
    auto scan = [&](const std::vector<BagRecord>& bags, std::size_t smoothing) {
      for (const auto& bag : bags) {
        for (std::size_t t = smoothing + 1; t < bag.training_curve.size(); ++t) {
          worst = std::max(worst, bag.training_curve[t] - bag.training_curve[t - 1]);
          ++checked;
        }
      }
    };
    scan(model.meta.main_bags, config.smoothing_rounds);
    scan(model.meta.pair_bags, config.interaction_smoothing_rounds);
  }
  o.check(checked > 0, "rounds after smoothing");
  o.check(worst <= 1e-12, "deviance increase");
  o.detail << "seeds=10 rounds_checked=" << checked << " max_increase=" << worst;
  return o;
}

// 4. Reversing the feature order barely moves predictions.
Outcome order_robustness() {
  Outcome o;
  double worst = 0.0;
  o.detail << "mard=[";
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SynthSpec spec = SynthSpec::default_spec(SynthKind::frequency);
    spec.n_rows = 20000;
    spec.seed = 200 + seed;
    const auto synth = synth_generate(spec);
    spec.seed = 300 + seed;
    const auto test = synth_generate(spec);
    TrainConfig config;
    config.objective = LossKind::poisson_deviance;
    config.learning_rate = 0.005;
    config.seed = seed;
    const std::size_t p = synth.data.feature_count();
    std::vector<std::size_t> reversed(p);
    for (std::size_t j = 0; j < p; ++j) reversed[j] = p - 1 - j;
    const auto forward = predict(train(synth.data, config), test.data);
    const auto backward = predict(train(synth.data.reorder_features(reversed), config), test.data);
    double mard = 0.0;
    for (std::size_t i = 0; i < forward.size(); ++i) mard += std::abs(backward[i] - forward[i]) / forward[i];
    mard /= static_cast<double>(forward.size());
    worst = std::max(worst, mard);
    o.detail << (seed ? " " : "") << mard;
  }
  o.detail << "]";
  o.check(worst <= 0.01, "mean absolute relative difference");
  return o;
}

SynthSpec interaction_spec(std::size_t n, std::uint64_t seed) {
  SynthSpec spec = SynthSpec::default_spec(SynthKind::frequency);
  spec.intercept = 0.0;
  spec.n_rows = n;
  spec.seed = seed;
  spec.interaction = SynthInteraction{"power", "density", 0.5};
  return spec;
}

// 5. FAST ranking finds the true pair; fitting it improves test EDR.
Outcome interaction_detection() {
  Outcome o;
  std::size_t first = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto synth = synth_generate(interaction_spec(50000, 400 + seed));
    TrainConfig mains;
    mains.objective = LossKind::poisson_deviance;
    mains.outer_bags = 1;
    mains.learning_rate = 0.05;
    mains.interactions = InteractionSpec::count(0);
    mains.seed = seed;
    const EbmModel model = train(synth.data, mains);
    const auto ranked = fast_rank(synth.data, model);
    const std::string a = model.feature_name(ranked[0].first);
    const std::string b = model.feature_name(ranked[0].second);
    if ((a == "power" && b == "density") || (a == "density" && b == "power")) ++first;
  }
  o.check(first >= 18, "true pair ranked first");

  const auto synth = synth_generate(interaction_spec(50000, 500));
  const auto test = synth_generate(interaction_spec(50000, 501));
  TrainConfig config;
  config.objective = LossKind::poisson_deviance;
  config.interactions = InteractionSpec::count(0);
  const EbmModel mains_only = train(synth.data, config);
  config.interactions = InteractionSpec::count(1);
  const EbmModel with_pair = train(synth.data, config);
  auto test_edr = [&](const EbmModel& m) {
    return edr(LossKind::poisson_deviance, test.data.target(), predict(m, test.data), test.data.exposure());
  };
  const double e0 = test_edr(mains_only);
  const double e1 = test_edr(with_pair);
  std::string fitted = with_pair.pairs.empty() ? "none" : with_pair.term_name(with_pair.mains.size());
  o.check(e1 - e0 >= 0.005, "edr gain");
  o.detail << "true_pair_first=" << first << "/20 edr_mains=" << e0 << " edr_with_pair=" << e1
           << " gain=" << e1 - e0 << " fitted_pair=" << fitted;
  return o;
}

// 6. Metric identities.
Outcome metric_identities() {
  Outcome o;
  const std::vector<double> y{1, 2, 3, 4, 5};
  const std::vector<double> up{0.1, 0.2, 0.3, 0.4, 0.5};
  const std::vector<double> down{0.5, 0.4, 0.3, 0.2, 0.1};
  const double g1 = gini_norm(y, up);
  const double g2 = gini_norm(y, down);
  o.check(std::abs(g1 - 1.0) <= 1e-12 && std::abs(g2 + 1.0) <= 1e-12, "gini");
  const std::vector<double> counts{1, 3, 0, 2};
  const std::vector<double> ones(4, 1.0);
  const double e_null = edr(LossKind::poisson_deviance, counts, std::vector<double>(4, 1.5), ones);
  const double e_perfect = edr(LossKind::gamma_deviance, y, y);
  o.check(std::abs(e_null) <= 1e-12 && std::abs(e_perfect - 1.0) <= 1e-12, "edr");

  std::mt19937_64 rng(6);
  std::gamma_distribution<double> g(2.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> yy(1000), pp(1000);
    for (auto& v : yy) v = g(rng);
    for (auto& v : pp) v = g(rng);
    const auto grid = default_murphy_grid(yy, pp);
    const auto fast = murphy_curve(yy, pp, grid);
    const auto slow = murphy_curve_naive(yy, pp, grid);
    for (std::size_t k = 0; k < grid.size(); ++k) worst = std::max(worst, std::abs(fast.s_values[k] - slow.s_values[k]));
  }
  o.check(worst <= 1e-12, "murphy sweep vs naive");

  SynthSpec spec = SynthSpec::default_spec(SynthKind::frequency);
  spec.n_rows = 100000;
  spec.seed = 600;
  const auto synth = synth_generate(spec);
  const auto obs = synth.data.target();
  const auto truth = expected_counts(synth.data, exp_all(synth.true_score));
  const auto c = init_intercept(LossKind::poisson_deviance, obs, synth.data.exposure());
  const auto null = expected_counts(synth.data, std::vector<double>(synth.data.n_rows(), c.mean));
  const auto grid = default_murphy_grid(obs, truth);
  const Dominance strict = dominance(murphy_curve(obs, truth, grid), murphy_curve(obs, null, grid));

  // Sampling-aware dominance: the true model may not be significantly worse
  // anywhere (paired z <= 3 per theta) and must be significantly better
  // somewhere. Strict pointwise dominance of sample curves is reported too.
  auto elementary = [](double theta, double f, double obs) {
    return std::min(f, obs) <= theta && theta < std::max(f, obs) ? std::abs(theta - obs) : 0.0;
  };
  const double n = static_cast<double>(obs.size());
  double max_z = -INFINITY;
  double min_z = INFINITY;
  std::size_t sample_violations = 0;
  for (double theta : grid) {
    double sum = 0.0, sum_sq = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
      const double d = elementary(theta, truth[i], obs[i]) - elementary(theta, null[i], obs[i]);
      sum += d;
      sum_sq += d * d;
    }
    const double mean = sum / n;
    const double var = std::max(0.0, sum_sq / n - mean * mean);
    const double se = std::sqrt(var / n);
    if (mean > 0.0) ++sample_violations;
    if (se > 0.0) {
      max_z = std::max(max_z, mean / se);
      min_z = std::min(min_z, mean / se);
    }
  }
  o.check(max_z <= 3.0 && min_z < -3.0, "true model dominates intercept-only");
  o.detail << "gini=" << g1 << "/" << g2 << " edr_null=" << e_null << " edr_perfect=" << e_perfect
           << " murphy_max_diff=" << worst << " strict_sample_dominance=" << to_string(strict)
           << " thetas_with_true_worse=" << sample_violations << "/" << grid.size() << " max_z_against=" << max_z
           << " min_z=" << min_z;
  return o;
}

// 7. Local explanations, PDP and permutation importance are exact.
Outcome explanation_exactness() {
  Outcome o;
  SynthSpec spec = SynthSpec::default_spec(SynthKind::frequency);
  spec.n_rows = 20000;
  spec.seed = 700;
  const auto synth = synth_generate(spec);
  TrainConfig config;
  config.objective = LossKind::poisson_deviance;
  config.outer_bags = 4;
  config.exclude = {"noise"};
  const EbmModel model = train(synth.data, config);

  const auto pred = predict(model, synth.data);
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::size_t> pick(0, synth.data.n_rows() - 1);
  std::size_t mismatches = 0;
  for (int k = 0; k < 10000; ++k) {
    const std::size_t row = pick(rng);
    if (local_explain(model, synth.data, row).prediction != pred[row]) ++mismatches;
  }
  o.check(mismatches == 0, "local reconstruction");

  double worst = 0.0;
  for (const auto& feature : {"age", "power", "density", "region"}) {
    const auto fast = pdp(model, synth.data, feature, 0, 10, 1);
    const auto slow = pdp_brute_force(model, synth.data, feature, 0, 10, 1);
    for (std::size_t g = 0; g < fast.size(); ++g) {
      worst = std::max(worst, std::abs(fast.pd[g] - slow.pd[g]) / std::max(1.0, std::abs(slow.pd[g])));
    }
  }
  o.check(worst <= 1e-12, "pdp analytic vs brute force");

  const auto report = permutation_importance(model, synth.data, LossKind::poisson_deviance, 3, 2);
  double absent = NAN;
  for (const auto& t : report.terms) {
    if (t.term == "noise") absent = t.importance;
  }
  o.check(absent == 0.0, "absent feature importance");
  o.detail << "pairs=" << model.pairs.size() << " local_mismatches=" << mismatches << "/10000 pdp_max_rel_diff=" << worst
           << " absent_fi=" << absent;
  return o;
}

// 8. Byte-identical model files and exact round trip.
Outcome determinism() {
  Outcome o;
  testing::TempDir dir;
  SynthSpec spec = SynthSpec::default_spec(SynthKind::severity);
  spec.n_rows = 10000;
  spec.seed = 800;
  const auto synth = synth_generate(spec);
  write_csv(synth.data, dir.file("d.csv"));
  synth.data.schema().save(dir.file("schema.json"));
  testing::write_file(dir.file("config.json"), R"({"objective": "gamma_deviance", "outer_bags": 4, "seed": 5})");
  auto train_cli = [&](const std::string& out, const std::string& threads) {
    std::ostringstream sink;
    return cli::run({"train", "--data", dir.file("d.csv"), "--schema", dir.file("schema.json"), "--config",
                     dir.file("config.json"), "--out", dir.file(out), "--threads", threads},
                    sink, sink);
  };
  o.check(train_cli("a.json", "1") == 0 && train_cli("b.json", "1") == 0 && train_cli("c.json", "8") == 0, "train");
  const std::string a = testing::read_file(dir.file("a.json"));
  const bool same_runs = a == testing::read_file(dir.file("b.json"));
  const bool same_threads = a == testing::read_file(dir.file("c.json"));
  o.check(same_runs, "repeat run");
  o.check(same_threads, "threads 1 vs 8");
  const EbmModel model = load_model(dir.file("a.json"));
  save_model(model, dir.file("a2.json"));
  const bool same_resave = a == testing::read_file(dir.file("a2.json"));
  const bool same_pred = predict(load_model(dir.file("a2.json")), synth.data) == predict(model, synth.data);
  o.check(same_resave && same_pred, "round trip");
  o.detail << "runs_identical=" << same_runs << " threads_identical=" << same_threads << " resave_identical="
           << same_resave << " predict_identical=" << same_pred << " bytes=" << a.size();
  return o;
}

// 9. Training time at severity scale.
Outcome performance() {
  Outcome o;
  SynthSpec spec = SynthSpec::default_spec(SynthKind::severity);
  spec.n_rows = 100000;
  spec.seed = 900;
  spec.features.push_back(step_feature("vehicle_age", 0.0, 20.0, {3.0, 10.0}, {-0.1, 0.0, 0.15}));
  spec.features.push_back(linear_feature("bonus", -0.3));
  spec.features.push_back(
      categorical_feature("brand", {"b1", "b2", "b3", "b4", "b5"}, {0.3, 0.25, 0.2, 0.15, 0.1}, {0, 0.1, -0.1, 0.2, 0}));
  const auto synth = synth_generate(spec);
  TrainConfig config;
  config.objective = LossKind::gamma_deviance;
  const auto start = Clock::now();
  const EbmModel model = train(synth.data, config);
  const double elapsed = seconds_since(start);
  o.check(synth.data.feature_count() == 8, "feature count");
  o.check(elapsed <= 60.0, "runtime");
  o.detail << "rows=100000 features=" << synth.data.feature_count() << " pairs=" << model.pairs.size()
           << " threads=" << std::thread::hardware_concurrency() << " time=" << elapsed << "s";
  return o;
}

// 10. Default configuration.
Outcome defaults() {
  Outcome o;
  const TrainConfig c;
  o.check(c.max_bins == 1024, "max_bins");
  o.check(c.learning_rate == 0.01, "learning_rate");
  o.check(c.outer_bags == 14, "outer_bags");
  o.check(c.validation_size == 0.15, "validation_size");
  o.check(c.smoothing_rounds == 200, "smoothing_rounds");
  o.check(c.early_stopping_rounds == 50, "early_stopping_rounds");
  o.check(c.early_stopping_tolerance == 1e-5, "early_stopping_tolerance");
  o.check(c.max_leaves == 3, "max_leaves");
  o.check(c.min_samples_leaf == 2, "min_samples_leaf");
  o.check(c.min_hessian == 1e-4, "min_hessian");
  o.check(c.interactions == InteractionSpec::fraction(0.9), "interactions");
  o.check(c.max_rounds == 25000, "max_rounds");
  o.detail << c.to_json().dump();
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"loss correctness", loss_correctness},
      {"oracle recovery", oracle_recovery},
      {"monotone descent", monotone_descent},
      {"cyclic order robustness", order_robustness},
      {"interaction detection", interaction_detection},
      {"metric identities", metric_identities},
      {"explanation exactness", explanation_exactness},
      {"determinism and round trip", determinism},
      {"performance", performance},
      {"defaults conformance", defaults},
  };
  // Optional arguments select criteria by number.
  std::vector<bool> selected(criteria.size(), argc <= 1);
  for (int a = 1; a < argc; ++a) {
    const int k = std::atoi(argv[a]);
    if (k >= 1 && k <= static_cast<int>(criteria.size())) selected[static_cast<std::size_t>(k - 1)] = true;
  }
  int failures = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    if (!selected[k]) continue;
    Outcome outcome;
    try {
      outcome = criteria[k].second();
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail << "exception: " << e.what();
    }
    failures += outcome.pass ? 0 : 1;
    std::cout << (outcome.pass ? "PASS" : "FAIL") << " criterion " << k + 1 << " (" << criteria[k].first
              << "): " << outcome.detail.str() << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
