#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "ebm/config.hpp"
#include "ebm/dataset.hpp"
#include "ebm/error.hpp"
#include "ebm/explain.hpp"
#include "ebm/interactions.hpp"
#include "ebm/metrics.hpp"
#include "ebm/model.hpp"
#include "ebm/numfmt.hpp"
#include "ebm/synth.hpp"
#include "ebm/trainer.hpp"

namespace ebm::cli {

std::string file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::uint64_t h = 0xcbf29ce484222325ull;
  char buffer[1 << 16];
  while (in.read(buffer, sizeof buffer) || in.gcount() > 0) {
    for (std::streamsize i = 0; i < in.gcount(); ++i) {
      h ^= static_cast<unsigned char>(buffer[i]);
      h *= 0x100000001b3ull;
    }
  }
  char hex[17];
  std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(h));
  return hex;
}

namespace {

nlohmann::json manifest(const std::string& command, const std::vector<std::string>& inputs,
                        const nlohmann::json& config = nullptr) {
  nlohmann::json m;
  m["tool"] = "ebm";
  m["version"] = kVersion;
  m["command"] = command;
  m["inputs"] = nlohmann::json::object();
  for (const auto& path : inputs) m["inputs"][path] = file_hash(path);
  m["config"] = config;
  return m;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << text;
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

void write_json(const std::string& path, const nlohmann::json& json) { write_text(path, json.dump(2) + "\n"); }

Dataset load_for_model(const EbmModel& model, const std::string& path, bool require_target) {
  return load_csv(path, model.schema, LoadOptions{require_target});
}

std::vector<double> read_pred_column(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  const auto it = std::find(header.begin(), header.end(), "pred");
  if (it == header.end()) throw ValidationError(path + ": missing column 'pred'");
  const auto col = static_cast<std::size_t>(it - header.begin());
  std::vector<double> out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    double v = 0.0;
    if (col >= fields.size() || !try_parse_real(fields[col], v)) {
      throw ValidationError(path + ":" + std::to_string(line_no) + ": non-numeric value in column 'pred'");
    }
    out.push_back(v);
  }
  return out;
}

std::string predictions_csv(const std::vector<double>& pred) {
  std::string out = "pred\n";
  for (double v : pred) out += format_real(v) + "\n";
  return out;
}

std::string training_log_csv(const EbmModel& model) {
  std::ostringstream out;
  out << "phase,bag,round,validation_deviance\n";
  auto emit = [&](const char* phase, const std::vector<BagRecord>& bags) {
    for (std::size_t b = 0; b < bags.size(); ++b) {
      const auto& curve = bags[b].validation_curve;
      for (std::size_t r = 0; r < curve.size(); ++r) {
        out << phase << ',' << b << ',' << r << ',' << format_real(curve[r]) << '\n';
      }
    }
  };
  emit("mains", model.meta.main_bags);
  emit("pairs", model.meta.pair_bags);
  return out.str();
}

nlohmann::json metrics_json(const MetricReport& report) {
  return {{"rmse", report.rmse},
          {"mae", report.mae},
          {"edr", report.edr},
          {"gini_norm", report.gini_norm},
          {"n", report.n},
          {"objective", to_string(report.objective)}};
}

// Cartesian product of {param: [values...]} applied on top of `base`.
std::vector<nlohmann::json> grid_points(const nlohmann::json& base, const nlohmann::json& grid) {
  if (!grid.is_object()) throw ValidationError("config grid: expected an object of value lists");
  std::vector<nlohmann::json> points{base};
  for (const auto& [key, values] : grid.items()) {
    if (!values.is_array() || values.empty()) throw ValidationError("config grid: '" + key + "' needs a value list");
    std::vector<nlohmann::json> next;
    for (const auto& p : points) {
      for (const auto& v : values) {
        nlohmann::json q = p;
        q[key] = v;
        next.push_back(std::move(q));
      }
    }
    points = std::move(next);
  }
  return points;
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open '" + path + "'");
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

struct Options {
  std::string data, schema, config, out, log, model, pred, murphy, hist, truth, spec, kind, method, term, feature,
      direction, target = "y", exposure, config_grid, eval_data, grid_out, schema_out, objective;
  std::size_t rows = 1000, row = 0, ice = 0, grid_size = 0, repeats = 1, threads = 0;
  std::uint64_t seed = 0;
  bool multiply_exposure = false;
};

int cmd_schema_infer(const Options& o) {
  std::optional<std::string> exposure;
  if (!o.exposure.empty()) {
    exposure = o.exposure;
  } else {
    std::ifstream in(o.data);
    std::string header;
    if (in && std::getline(in, header)) {
      if (!header.empty() && header.back() == '\r') header.pop_back();
      const auto names = split_csv_line(header);
      if (std::find(names.begin(), names.end(), "exposure") != names.end()) exposure = "exposure";
    }
  }
  infer_schema(o.data, o.target, exposure).save(o.out);
  return 0;
}

int cmd_synth(const Options& o, bool seed_given, bool rows_given) {
  SynthSpec spec = o.spec.empty() ? SynthSpec::default_spec(parse_synth_kind(o.kind)) : SynthSpec::load(o.spec);
  if (!o.kind.empty()) spec.kind = parse_synth_kind(o.kind);
  if (rows_given || o.spec.empty()) spec.n_rows = o.rows;
  if (seed_given || o.spec.empty()) spec.seed = o.seed;
  const SynthResult result = synth_generate(spec);
  write_csv(result.data, o.out);
  if (!o.truth.empty()) {
    nlohmann::json truth = result.truth.to_json();
    truth["manifest"] = manifest("synth", o.spec.empty() ? std::vector<std::string>{} : std::vector{o.spec});
    write_json(o.truth, truth);
  }
  if (!o.schema_out.empty()) result.data.schema().save(o.schema_out);
  return 0;
}

int cmd_train(const Options& o, bool seed_given, std::ostream& out) {
  const FeatureSchema schema = FeatureSchema::load(o.schema);
  const Dataset data = load_csv(o.data, schema);
  nlohmann::json base = o.config.empty() ? nlohmann::json::object() : read_json(o.config);
  if (seed_given) base["seed"] = o.seed;
  std::vector<std::string> inputs{o.data, o.schema};
  if (!o.config.empty()) inputs.push_back(o.config);
  TrainOptions options;
  options.threads = o.threads;

  if (o.config_grid.empty()) {
    const TrainConfig config = TrainConfig::from_json(base);
    EbmModel model = train(data, config, options);
    model.meta.manifest = manifest("train", inputs, config.to_json());
    save_model(model, o.out);
    if (!o.log.empty()) write_text(o.log, training_log_csv(model));
    return 0;
  }

  if (o.eval_data.empty()) throw ValidationError("--config-grid needs --eval-data");
  const Dataset eval = load_csv(o.eval_data, schema);
  inputs.push_back(o.config_grid);
  inputs.push_back(o.eval_data);
  const auto points = grid_points(base, read_json(o.config_grid));
  std::ostringstream table;
  table << "point,config,rmse,mae,edr,gini_norm\n";
  std::optional<EbmModel> best;
  double best_edr = -INFINITY;
  for (std::size_t k = 0; k < points.size(); ++k) {
    const TrainConfig config = TrainConfig::from_json(points[k]);
    EbmModel model = train(data, config, options);
    const auto report = evaluate_predictions(config.objective, eval.target(), predict(model, eval), eval.exposure());
    table << k << ',' << csv_escape(config.to_json().dump()) << ',' << format_real(report.rmse) << ','
          << format_real(report.mae) << ',' << format_real(report.edr) << ',' << format_real(report.gini_norm)
          << '\n';
    out << "grid point " << k << ": edr " << format_real(report.edr) << "\n";
    if (report.edr > best_edr) {
      best_edr = report.edr;
      model.meta.manifest = manifest("train", inputs, config.to_json());
      best = std::move(model);
    }
  }
  if (!o.grid_out.empty()) write_text(o.grid_out, table.str());
  save_model(*best, o.out);
  if (!o.log.empty()) write_text(o.log, training_log_csv(*best));
  return 0;
}

int cmd_predict(const Options& o) {
  const EbmModel model = load_model(o.model);
  const Dataset data = load_for_model(model, o.data, false);
  auto pred = predict(model, data);
  if (o.multiply_exposure) {
    for (std::size_t i = 0; i < pred.size(); ++i) pred[i] *= data.exposure()[i];
  }
  write_text(o.out, predictions_csv(pred));
  return 0;
}

int cmd_evaluate(const Options& o) {
  if (o.model.empty() == o.pred.empty()) throw ValidationError("evaluate needs exactly one of --model or --pred");
  Dataset data;
  std::vector<double> pred;
  LossKind kind = LossKind::squared_error;
  std::vector<std::string> inputs;
  if (!o.model.empty()) {
    const EbmModel model = load_model(o.model);
    data = load_for_model(model, o.data, true);
    pred = predict(model, data);
    kind = model.objective;
    inputs = {o.model, o.data};
  } else {
    if (o.schema.empty()) throw ValidationError("evaluate --pred needs --schema");
    data = load_csv(o.data, FeatureSchema::load(o.schema));
    pred = read_pred_column(o.pred);
    if (pred.size() != data.n_rows()) throw ValidationError("evaluate: prediction count does not match data rows");
    if (!o.objective.empty()) kind = parse_loss(o.objective);
    inputs = {o.pred, o.data, o.schema};
  }
  const auto report = evaluate_predictions(kind, data.target(), pred, data.exposure());
  nlohmann::json j = metrics_json(report);
  j["manifest"] = manifest("evaluate", inputs);
  write_json(o.out, j);

  std::vector<double> expected = pred;
  if (kind == LossKind::poisson_deviance) {
    for (std::size_t i = 0; i < expected.size(); ++i) expected[i] *= data.exposure()[i];
  }
  if (!o.murphy.empty()) {
    const auto curve = murphy_curve(data.target(), expected);
    std::string text = "theta,s\n";
    for (std::size_t k = 0; k < curve.thetas.size(); ++k) {
      text += format_real(curve.thetas[k]) + "," + format_real(curve.s_values[k]) + "\n";
    }
    write_text(o.murphy, text);
  }
  if (!o.hist.empty()) {
    const auto h = histogram(expected);
    std::string text = "bin_low,bin_high,count\n";
    for (std::size_t k = 0; k < h.counts.size(); ++k) {
      text += format_real(h.edges[k]) + "," + format_real(h.edges[k + 1]) + "," + std::to_string(h.counts[k]) + "\n";
    }
    write_text(o.hist, text);
  }
  return 0;
}

int cmd_explain_global(const Options& o) {
  const EbmModel model = load_model(o.model);
  const ImportanceMethod method = parse_importance_method(o.method);
  const Dataset data = load_for_model(model, o.data, method == ImportanceMethod::permutation);
  const auto report = method == ImportanceMethod::shape
                          ? term_importance(model, data)
                          : permutation_importance(model, data, model.objective, o.seed, o.repeats);
  write_text(o.out, importance_to_csv(report));
  return 0;
}

int cmd_explain_local(const Options& o) {
  const EbmModel model = load_model(o.model);
  const Dataset data = load_for_model(model, o.data, false);
  write_text(o.out, local_to_csv(local_explain(model, data, o.row)));
  return 0;
}

int cmd_shape(const Options& o) {
  const EbmModel model = load_model(o.model);
  write_text(o.out, shape_to_csv(export_shape(model, o.term)));
  return 0;
}

int cmd_pdp(const Options& o) {
  const EbmModel model = load_model(o.model);
  const Dataset data = load_for_model(model, o.data, false);
  write_text(o.out, pdp_to_csv(pdp(model, data, o.feature, o.grid_size, o.ice, o.seed)));
  return 0;
}

int cmd_interactions_rank(const Options& o) {
  EbmModel model = load_model(o.model);
  model.pairs.clear();
  const Dataset data = load_for_model(model, o.data, true);
  const auto ranked = fast_rank(data, model);
  std::string text = "pair,strength\n";
  for (const auto& r : ranked) {
    text += csv_escape(model.feature_name(r.first) + ":" + model.feature_name(r.second)) + "," +
            format_real(r.strength) + "\n";
  }
  write_text(o.out, text);
  return 0;
}

int cmd_monotonize(const Options& o) {
  const EbmModel model = load_model(o.model);
  EbmModel out = monotonize(model, o.feature, parse_direction(o.direction));
  nlohmann::json extra = {{"feature", o.feature}, {"direction", o.direction}};
  out.meta.manifest = manifest("monotonize", {o.model}, extra);
  save_model(out, o.out);
  return 0;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Explainable boosting machines for frequency and severity modeling", "ebm"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));
  Options o;

  auto* schema = app.add_subcommand("schema", "Schema utilities");
  schema->require_subcommand(1);
  auto* infer = schema->add_subcommand("infer", "Infer a schema from a CSV file");
  infer->add_option("--data", o.data, "Input CSV")->required();
  infer->add_option("--out", o.out, "Schema JSON to write")->required();
  infer->add_option("--target", o.target, "Target column name");
  infer->add_option("--exposure", o.exposure, "Exposure column name (default: 'exposure' if present)");

  auto* synth = app.add_subcommand("synth", "Generate synthetic frequency or severity data");
  synth->add_option("--kind", o.kind, "frequency or severity");
  auto* synth_rows = synth->add_option("--rows", o.rows, "Row count");
  auto* synth_seed = synth->add_option("--seed", o.seed, "Random seed");
  synth->add_option("--spec", o.spec, "Synthetic spec JSON (default: built-in spec)");
  synth->add_option("--out", o.out, "CSV to write")->required();
  synth->add_option("--truth", o.truth, "Centered true model JSON to write");
  synth->add_option("--schema-out", o.schema_out, "Schema JSON to write");

  auto* train_cmd = app.add_subcommand("train", "Train a model");
  train_cmd->add_option("--data", o.data, "Training CSV")->required();
  train_cmd->add_option("--schema", o.schema, "Schema JSON")->required();
  train_cmd->add_option("--config", o.config, "Training config JSON");
  train_cmd->add_option("--out", o.out, "Model JSON to write")->required();
  train_cmd->add_option("--log", o.log, "Validation-curve CSV to write");
  train_cmd->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
  auto* train_seed = train_cmd->add_option("--seed", o.seed, "Overrides the config seed");
  train_cmd->add_option("--config-grid", o.config_grid, "JSON object of parameter value lists to sweep");
  train_cmd->add_option("--eval-data", o.eval_data, "Evaluation CSV for --config-grid");
  train_cmd->add_option("--grid-out", o.grid_out, "Sweep results CSV");

  auto* predict_cmd = app.add_subcommand("predict", "Predict with a model");
  predict_cmd->add_option("--model", o.model, "Model JSON")->required();
  predict_cmd->add_option("--data", o.data, "Input CSV")->required();
  predict_cmd->add_option("--out", o.out, "Predictions CSV")->required();
  predict_cmd->add_flag("--multiply-exposure", o.multiply_exposure, "Scale predictions by exposure");

  auto* evaluate = app.add_subcommand("evaluate", "Compute evaluation metrics");
  evaluate->add_option("--model", o.model, "Model JSON");
  evaluate->add_option("--pred", o.pred, "Predictions CSV with a 'pred' column");
  evaluate->add_option("--data", o.data, "Data CSV with targets")->required();
  evaluate->add_option("--schema", o.schema, "Schema JSON (with --pred)");
  evaluate->add_option("--objective", o.objective, "Deviance for EDR (with --pred; default rmse)");
  evaluate->add_option("--out", o.out, "Metrics JSON")->required();
  evaluate->add_option("--murphy", o.murphy, "Murphy diagram CSV");
  evaluate->add_option("--histogram", o.hist, "Prediction histogram CSV");

  auto* explain = app.add_subcommand("explain", "Global and local explanations");
  explain->require_subcommand(1);
  auto* global = explain->add_subcommand("global", "Term or permutation importance");
  global->add_option("--model", o.model, "Model JSON")->required();
  global->add_option("--data", o.data, "Data CSV")->required();
  global->add_option("--method", o.method, "shape or permutation")->required();
  global->add_option("--seed", o.seed, "Permutation seed");
  global->add_option("--repeats", o.repeats, "Permutation repeats");
  global->add_option("--out", o.out, "Importance CSV")->required();
  auto* local = explain->add_subcommand("local", "Per-term contributions of one row");
  local->add_option("--model", o.model, "Model JSON")->required();
  local->add_option("--data", o.data, "Data CSV")->required();
  local->add_option("--row", o.row, "Zero-based row index")->required();
  local->add_option("--out", o.out, "Contributions CSV")->required();

  auto* shape = app.add_subcommand("shape", "Export a term's shape or heatmap");
  shape->add_option("--model", o.model, "Model JSON")->required();
  shape->add_option("--term", o.term, "Term name, 'a' or 'a:b'")->required();
  shape->add_option("--out", o.out, "Shape CSV")->required();

  auto* pdp_cmd = app.add_subcommand("pdp", "Partial dependence and ICE curves");
  pdp_cmd->add_option("--model", o.model, "Model JSON")->required();
  pdp_cmd->add_option("--data", o.data, "Data CSV")->required();
  pdp_cmd->add_option("--feature", o.feature, "Feature name")->required();
  pdp_cmd->add_option("--ice", o.ice, "Number of ICE rows");
  pdp_cmd->add_option("--grid-size", o.grid_size, "Quantile grid size (0 = bin medians)");
  pdp_cmd->add_option("--seed", o.seed, "ICE sampling seed");
  pdp_cmd->add_option("--out", o.out, "PDP CSV")->required();

  auto* interactions = app.add_subcommand("interactions", "Pair interaction tools");
  interactions->require_subcommand(1);
  auto* rank = interactions->add_subcommand("rank", "Rank feature pairs");
  rank->add_option("--model", o.model, "Model JSON")->required();
  rank->add_option("--data", o.data, "Data CSV")->required();
  rank->add_option("--out", o.out, "Ranking CSV")->required();

  auto* mono = app.add_subcommand("monotonize", "Force a monotone shape");
  mono->add_option("--model", o.model, "Model JSON")->required();
  mono->add_option("--feature", o.feature, "Continuous feature")->required();
  mono->add_option("--direction", o.direction, "inc or dec")->required();
  mono->add_option("--out", o.out, "Model JSON to write")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (infer->parsed()) return cmd_schema_infer(o);
    if (synth->parsed()) {
      if (o.spec.empty() && o.kind.empty()) throw ValidationError("synth needs --kind or --spec");
      return cmd_synth(o, synth_seed->count() > 0, synth_rows->count() > 0);
    }
    if (train_cmd->parsed()) return cmd_train(o, train_seed->count() > 0, out);
    if (predict_cmd->parsed()) return cmd_predict(o);
    if (evaluate->parsed()) return cmd_evaluate(o);
    if (global->parsed()) return cmd_explain_global(o);
    if (local->parsed()) return cmd_explain_local(o);
    if (shape->parsed()) return cmd_shape(o);
    if (pdp_cmd->parsed()) return cmd_pdp(o);
    if (rank->parsed()) return cmd_interactions_rank(o);
    if (mono->parsed()) return cmd_monotonize(o);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << "\n";
    return 1;
  }
  err << "error: no command\n";
  return 2;
}

}  // namespace ebm::cli
