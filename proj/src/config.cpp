#include "ebm/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "ebm/error.hpp"
#include "ebm/numfmt.hpp"

namespace ebm {

nlohmann::json InteractionSpec::to_json() const {
  switch (mode) {
    case Mode::count: return static_cast<std::uint64_t>(value);
    case Mode::fraction: return value;
    case Mode::explicit_pairs: {
      auto out = nlohmann::json::array();
      for (const auto& [a, b] : pairs) out.push_back({a, b});
      return out;
    }
  }
  return value;
}

InteractionSpec InteractionSpec::from_json(const nlohmann::json& json) {
  if (json.is_array()) {
    std::vector<std::pair<std::string, std::string>> pairs;
    for (const auto& item : json) {
      if (!item.is_array() || item.size() != 2 || !item[0].is_string() || !item[1].is_string()) {
        throw ValidationError("interactions: explicit pairs must be [name, name] arrays");
      }
      pairs.emplace_back(item[0].get<std::string>(), item[1].get<std::string>());
    }
    return explicit_list(std::move(pairs));
  }
  if (json.is_number_integer() || json.is_number_unsigned()) {
    const auto n = json.get<std::int64_t>();
    if (n < 0) throw ValidationError("interactions: count must be non-negative");
    return count(static_cast<std::size_t>(n));
  }
  if (json.is_number_float()) {
    const double v = json.get<double>();
    if (v > 0.0 && v < 1.0) return fraction(v);
    if (v >= 0.0 && v == std::floor(v)) return count(static_cast<std::size_t>(v));
    throw ValidationError("interactions: expected a count, a fraction in (0, 1), or a pair list");
  }
  throw ValidationError("interactions: expected a count, a fraction in (0, 1), or a pair list");
}

void TrainConfig::validate() const {
  auto fail = [](const std::string& what) { throw ValidationError("config: " + what); };
  if (max_bins < 2) fail("max_bins must be at least 2");
  if (max_interaction_bins < 2) fail("max_interaction_bins must be at least 2");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) fail("learning_rate must be positive");
  if (!(validation_size >= 0.0 && validation_size < 1.0)) fail("validation_size must lie in [0, 1)");
  if (outer_bags < 1) fail("outer_bags must be at least 1");
  if (max_leaves < 1) fail("max_leaves must be at least 1");
  if (!(min_hessian >= 0.0)) fail("min_hessian must be non-negative");
  if (!(early_stopping_tolerance >= 0.0)) fail("early_stopping_tolerance must be non-negative");
  if (!(gamma_floor < 0.0) || !std::isfinite(gamma_floor)) fail("gamma_floor must be a finite negative number");
  if (greedy_ratio != 0.0) fail("greedy_ratio is not implemented (only pure cyclic boosting; use 0)");
  if (cyclic_progress != 1.0) fail("cyclic_progress is not implemented (only pure cyclic boosting; use 1)");
  if (interactions.mode == InteractionSpec::Mode::fraction &&
      !(interactions.value > 0.0 && interactions.value < 1.0)) {
    fail("interactions fraction must lie in (0, 1)");
  }
}

nlohmann::json TrainConfig::to_json() const {
  nlohmann::json out;
  out["objective"] = to_string(objective);
  out["max_bins"] = max_bins;
  out["max_interaction_bins"] = max_interaction_bins;
  out["interactions"] = interactions.to_json();
  out["learning_rate"] = learning_rate;
  out["max_rounds"] = max_rounds;
  out["smoothing_rounds"] = smoothing_rounds;
  out["interaction_smoothing_rounds"] = interaction_smoothing_rounds;
  out["early_stopping_rounds"] = early_stopping_rounds;
  out["early_stopping_tolerance"] = early_stopping_tolerance;
  out["validation_size"] = validation_size;
  out["outer_bags"] = outer_bags;
  out["inner_bags"] = inner_bags;
  out["max_leaves"] = max_leaves;
  out["min_samples_leaf"] = min_samples_leaf;
  out["min_hessian"] = min_hessian;
  out["greedy_ratio"] = greedy_ratio;
  out["cyclic_progress"] = cyclic_progress;
  out["gamma_floor"] = gamma_floor;
  out["exclude"] = exclude;
  out["seed"] = seed;
  return out;
}

namespace {

template <typename T>
T get_count(const nlohmann::json& json, const std::string& key) {
  const auto& v = json.at(key);
  if (v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0)) return v.get<T>();
  if (v.is_number_float() && v.get<double>() >= 0.0 && v.get<double>() == std::floor(v.get<double>())) {
    return static_cast<T>(v.get<double>());
  }
  throw ValidationError("config: '" + key + "' must be a non-negative integer");
}

double get_real(const nlohmann::json& json, const std::string& key) {
  const auto& v = json.at(key);
  if (!v.is_number()) throw ValidationError("config: '" + key + "' must be a number");
  return v.get<double>();
}

}  // namespace

TrainConfig TrainConfig::from_json(const nlohmann::json& json) {
  if (!json.is_object()) throw ValidationError("config: expected a JSON object");
  static const std::set<std::string> known = {
      "objective",     "max_bins",         "max_interaction_bins", "interactions",
      "learning_rate", "max_rounds",       "smoothing_rounds",     "interaction_smoothing_rounds",
      "early_stopping_rounds", "early_stopping_tolerance", "validation_size", "outer_bags",
      "inner_bags",    "max_leaves",       "min_samples_leaf",     "min_hessian",
      "greedy_ratio",  "cyclic_progress",  "gamma_floor",          "exclude",
      "seed"};
  for (const auto& [key, value] : json.items()) {
    if (!known.count(key)) throw ValidationError("config: unknown parameter '" + key + "'");
  }
  TrainConfig c;
  try {
    if (json.contains("objective")) c.objective = parse_loss(json.at("objective").get<std::string>());
    if (json.contains("max_bins")) c.max_bins = get_count<std::size_t>(json, "max_bins");
    if (json.contains("max_interaction_bins")) {
      c.max_interaction_bins = get_count<std::size_t>(json, "max_interaction_bins");
    }
    if (json.contains("interactions")) c.interactions = InteractionSpec::from_json(json.at("interactions"));
    if (json.contains("learning_rate")) c.learning_rate = get_real(json, "learning_rate");
    if (json.contains("max_rounds")) c.max_rounds = get_count<std::size_t>(json, "max_rounds");
    if (json.contains("smoothing_rounds")) c.smoothing_rounds = get_count<std::size_t>(json, "smoothing_rounds");
    if (json.contains("interaction_smoothing_rounds")) {
      c.interaction_smoothing_rounds = get_count<std::size_t>(json, "interaction_smoothing_rounds");
    }
    if (json.contains("early_stopping_rounds")) {
      c.early_stopping_rounds = get_count<std::size_t>(json, "early_stopping_rounds");
    }
    if (json.contains("early_stopping_tolerance")) {
      c.early_stopping_tolerance = get_real(json, "early_stopping_tolerance");
    }
    if (json.contains("validation_size")) c.validation_size = get_real(json, "validation_size");
    if (json.contains("outer_bags")) c.outer_bags = get_count<std::size_t>(json, "outer_bags");
    if (json.contains("inner_bags")) c.inner_bags = get_count<std::size_t>(json, "inner_bags");
    if (json.contains("max_leaves")) c.max_leaves = get_count<std::size_t>(json, "max_leaves");
    if (json.contains("min_samples_leaf")) c.min_samples_leaf = get_count<std::size_t>(json, "min_samples_leaf");
    if (json.contains("min_hessian")) c.min_hessian = get_real(json, "min_hessian");
    if (json.contains("greedy_ratio")) c.greedy_ratio = get_real(json, "greedy_ratio");
    if (json.contains("cyclic_progress")) c.cyclic_progress = get_real(json, "cyclic_progress");
    if (json.contains("gamma_floor")) c.gamma_floor = get_real(json, "gamma_floor");
    if (json.contains("exclude")) c.exclude = json.at("exclude").get<std::vector<std::string>>();
    if (json.contains("seed")) c.seed = get_count<std::uint64_t>(json, "seed");
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

TrainConfig TrainConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  nlohmann::json json;
  try {
    in >> json;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return from_json(json);
}

}  // namespace ebm
