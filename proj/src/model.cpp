#include "ebm/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "ebm/error.hpp"
#include "ebm/numfmt.hpp"

namespace ebm {

std::string EbmModel::term_name(std::size_t term) const {
  if (term < mains.size()) return feature_name(mains[term].feature);
  const auto& pair = pairs.at(term - mains.size());
  return feature_name(pair.first) + ":" + feature_name(pair.second);
}

std::optional<std::size_t> EbmModel::find_term(const std::string& name) const {
  for (std::size_t t = 0; t < term_count(); ++t) {
    if (term_name(t) == name) return t;
  }
  // Pair names are accepted in either order.
  const auto colon = name.find(':');
  if (colon != std::string::npos) {
    const std::string swapped = name.substr(colon + 1) + ":" + name.substr(0, colon);
    for (std::size_t t = mains.size(); t < term_count(); ++t) {
      if (term_name(t) == swapped) return t;
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

nlohmann::json reals(const std::vector<double>& values) {
  auto out = nlohmann::json::array();
  for (double v : values) out.push_back(format_real(v));
  return out;
}

std::vector<double> parse_reals(const nlohmann::json& json) {
  std::vector<double> out;
  out.reserve(json.size());
  for (const auto& v : json) out.push_back(parse_real(v.get<std::string>()));
  return out;
}

nlohmann::json bag_to_json(const BagRecord& bag) {
  return {{"stop_round", bag.stop_round},
          {"best_round", bag.best_round},
          {"best_validation_deviance", format_real(bag.best_validation_deviance)}};
}

BagRecord bag_from_json(const nlohmann::json& json) {
  BagRecord bag;
  bag.stop_round = json.at("stop_round").get<std::size_t>();
  bag.best_round = json.at("best_round").get<std::size_t>();
  bag.best_validation_deviance = parse_real(json.at("best_validation_deviance").get<std::string>());
  return bag;
}

std::size_t feature_by_name(const EbmModel& model, const std::string& name) {
  for (std::size_t j = 0; j < model.bins.size(); ++j) {
    if (model.bins[j].name() == name) return j;
  }
  throw ValidationError("model: term references unknown feature '" + name + "'");
}

}  // namespace

nlohmann::json model_to_json(const EbmModel& model) {
  nlohmann::json out;
  out["format_version"] = kModelFormatVersion;
  out["objective"] = to_string(model.objective);
  out["link"] = link_name(model.objective);
  out["schema"] = model.schema.to_json();
  auto bin_maps = nlohmann::json::array();
  for (const auto& b : model.bins) bin_maps.push_back(b.to_json());
  out["bin_maps"] = std::move(bin_maps);
  out["intercept"] = format_real(model.intercept);
  auto terms = nlohmann::json::array();
  for (const auto& main : model.mains) {
    terms.push_back({{"features", {model.feature_name(main.feature)}},
                     {"scores", reals(main.scores)},
                     {"stderr", reals(main.stderrs)}});
  }
  for (const auto& pair : model.pairs) {
    terms.push_back({{"features", {model.feature_name(pair.first), model.feature_name(pair.second)}},
                     {"bin_maps", {pair.rows.to_json(), pair.cols.to_json()}},
                     {"weights", reals(pair.weights)},
                     {"scores", reals(pair.scores)},
                     {"stderr", reals(pair.stderrs)}});
  }
  out["terms"] = std::move(terms);

  nlohmann::json meta;
  meta["config"] = model.config.to_json();
  meta["n_train"] = model.meta.n_train;
  auto mains = nlohmann::json::array();
  for (const auto& bag : model.meta.main_bags) mains.push_back(bag_to_json(bag));
  meta["main_bags"] = std::move(mains);
  auto pairs = nlohmann::json::array();
  for (const auto& bag : model.meta.pair_bags) pairs.push_back(bag_to_json(bag));
  meta["pair_bags"] = std::move(pairs);
  auto ranked = nlohmann::json::array();
  for (const auto& r : model.meta.ranked_pairs) {
    ranked.push_back({{"pair", {model.feature_name(r.first), model.feature_name(r.second)}},
                      {"strength", format_real(r.strength)}});
  }
  meta["ranked_pairs"] = std::move(ranked);
  meta["manifest"] = model.meta.manifest.is_null() ? nlohmann::json::object() : model.meta.manifest;
  out["meta"] = std::move(meta);
  return out;
}

EbmModel model_from_json(const nlohmann::json& json) {
  try {
    const int version = json.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw ValidationError("model: unsupported format_version " + std::to_string(version));
    }
    EbmModel model;
    model.objective = parse_loss(json.at("objective").get<std::string>());
    model.schema = FeatureSchema::from_json(json.at("schema"));
    for (const auto& b : json.at("bin_maps")) model.bins.push_back(FeatureBins::from_json(b));
    const auto features = model.schema.features();
    if (features.size() != model.bins.size()) throw ValidationError("model: bin map count differs from schema");
    for (std::size_t j = 0; j < features.size(); ++j) {
      if (features[j].name != model.bins[j].name() || features[j].kind != model.bins[j].kind()) {
        throw ValidationError("model: bin map '" + model.bins[j].name() + "' does not match schema");
      }
    }
    model.intercept = parse_real(json.at("intercept").get<std::string>());
    for (const auto& term : json.at("terms")) {
      const auto names = term.at("features").get<std::vector<std::string>>();
      if (names.size() == 1) {
        MainTerm main;
        main.feature = feature_by_name(model, names[0]);
        main.scores = parse_reals(term.at("scores"));
        main.stderrs = parse_reals(term.at("stderr"));
        if (main.scores.size() != model.bins[main.feature].bin_count() || main.stderrs.size() != main.scores.size()) {
          throw ValidationError("model: term '" + names[0] + "' has the wrong number of scores");
        }
        model.mains.push_back(std::move(main));
      } else if (names.size() == 2) {
        PairTerm pair;
        pair.first = feature_by_name(model, names[0]);
        pair.second = feature_by_name(model, names[1]);
        pair.rows = FeatureBins::from_json(term.at("bin_maps").at(0));
        pair.cols = FeatureBins::from_json(term.at("bin_maps").at(1));
        pair.weights = parse_reals(term.at("weights"));
        pair.scores = parse_reals(term.at("scores"));
        pair.stderrs = parse_reals(term.at("stderr"));
        const std::size_t cells = pair.rows.bin_count() * pair.cols.bin_count();
        if (pair.scores.size() != cells || pair.stderrs.size() != cells || pair.weights.size() != cells) {
          throw ValidationError("model: pair term has the wrong grid size");
        }
        model.pairs.push_back(std::move(pair));
      } else {
        throw ValidationError("model: terms must reference one or two features");
      }
    }
    if (model.mains.size() != model.bins.size()) throw ValidationError("model: one main term per feature required");
    for (std::size_t j = 0; j < model.mains.size(); ++j) {
      if (model.mains[j].feature != j) throw ValidationError("model: main terms must follow schema order");
    }
    const auto& meta = json.at("meta");
    model.config = TrainConfig::from_json(meta.at("config"));
    model.meta.n_train = meta.value("n_train", std::size_t{0});
    for (const auto& bag : meta.at("main_bags")) model.meta.main_bags.push_back(bag_from_json(bag));
    for (const auto& bag : meta.at("pair_bags")) model.meta.pair_bags.push_back(bag_from_json(bag));
    for (const auto& r : meta.at("ranked_pairs")) {
      const auto names = r.at("pair").get<std::vector<std::string>>();
      model.meta.ranked_pairs.push_back({feature_by_name(model, names.at(0)), feature_by_name(model, names.at(1)),
                                         parse_real(r.at("strength").get<std::string>())});
    }
    model.meta.manifest = meta.value("manifest", nlohmann::json::object());
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("model: malformed JSON: ") + e.what());
  }
}

std::string dump_model(const EbmModel& model) { return model_to_json(model).dump(1) + "\n"; }

void save_model(const EbmModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << dump_model(model);
}

EbmModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open model file '" + path + "'");
  nlohmann::json json;
  try {
    in >> json;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return model_from_json(json);
}

// ---------------------------------------------------------------------------
// Scoring

BinnedRows bin_rows(const EbmModel& model, const Dataset& data) {
  BinnedRows out;
  out.n_rows = data.n_rows();
  std::vector<const Column*> columns;
  for (const auto& bins : model.bins) {
    const Column* found = nullptr;
    for (const auto& column : data.columns()) {
      if (column.name == bins.name()) found = &column;
    }
    if (found == nullptr) throw ValidationError("schema mismatch: data lacks feature '" + bins.name() + "'");
    if (found->kind != bins.kind()) {
      throw ValidationError("schema mismatch: feature '" + bins.name() + "' has a different kind");
    }
    columns.push_back(found);
  }
  for (const auto& main : model.mains) out.mains.push_back(model.bins[main.feature].index_column(*columns[main.feature]));
  for (const auto& pair : model.pairs) {
    const auto r = pair.rows.index_column(*columns[pair.first]);
    const auto c = pair.cols.index_column(*columns[pair.second]);
    std::vector<std::int32_t> cells(out.n_rows);
    for (std::size_t i = 0; i < out.n_rows; ++i) {
      cells[i] = (r[i] < 0 || c[i] < 0)
                     ? -1
                     : static_cast<std::int32_t>(pair.cell(static_cast<std::size_t>(r[i]), static_cast<std::size_t>(c[i])));
    }
    out.pairs.push_back(std::move(cells));
  }
  return out;
}

std::vector<double> predict_scores(const EbmModel& model, const BinnedRows& rows) {
  std::vector<double> scores(rows.n_rows, model.intercept);
  for (std::size_t t = 0; t < model.mains.size(); ++t) {
    const auto& table = model.mains[t].scores;
    const auto& index = rows.mains[t];
    for (std::size_t i = 0; i < rows.n_rows; ++i) {
      scores[i] += index[i] < 0 ? 0.0 : table[static_cast<std::size_t>(index[i])];
    }
  }
  for (std::size_t t = 0; t < model.pairs.size(); ++t) {
    const auto& table = model.pairs[t].scores;
    const auto& index = rows.pairs[t];
    for (std::size_t i = 0; i < rows.n_rows; ++i) {
      scores[i] += index[i] < 0 ? 0.0 : table[static_cast<std::size_t>(index[i])];
    }
  }
  return scores;
}

std::vector<double> predict_scores(const EbmModel& model, const Dataset& data) {
  return predict_scores(model, bin_rows(model, data));
}

std::vector<double> predict(const EbmModel& model, const Dataset& data) {
  auto scores = predict_scores(model, data);
  for (double& s : scores) s = inverse_link(model.objective, s);
  return scores;
}

double TermScores::total() const {
  double score = intercept;
  for (const auto& t : terms) score += t.score;
  return score;
}

TermScores score_terms(const EbmModel& model, const Dataset& data, std::size_t row) {
  if (row >= data.n_rows()) throw ValidationError("row " + std::to_string(row) + " out of range");
  const std::size_t rows[] = {row};
  const BinnedRows binned = bin_rows(model, data.take(rows));
  TermScores out;
  out.intercept = model.intercept;
  for (std::size_t t = 0; t < model.mains.size(); ++t) {
    const auto bin = binned.mains[t][0];
    out.terms.push_back({t, model.term_name(t), bin < 0 ? 0.0 : model.mains[t].scores[static_cast<std::size_t>(bin)]});
  }
  for (std::size_t p = 0; p < model.pairs.size(); ++p) {
    const auto cell = binned.pairs[p][0];
    const std::size_t t = model.mains.size() + p;
    out.terms.push_back({t, model.term_name(t), cell < 0 ? 0.0 : model.pairs[p].scores[static_cast<std::size_t>(cell)]});
  }
  return out;
}

void center_terms(EbmModel& model) {
  auto center = [&](std::vector<double>& scores, const std::vector<double>& weights) {
    double sw = 0.0;
    double swf = 0.0;
    for (std::size_t k = 0; k < scores.size(); ++k) {
      sw += weights[k];
      swf += weights[k] * scores[k];
    }
    if (!(sw > 0.0)) return;
    const double shift = swf / sw;
    for (double& s : scores) s -= shift;
    model.intercept += shift;
  };
  for (auto& main : model.mains) center(main.scores, model.bins[main.feature].weights());
  for (auto& pair : model.pairs) center(pair.scores, pair.weights);
}

}  // namespace ebm
