#include "ebm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>

#include "ebm/error.hpp"

namespace ebm {

std::string to_string(SynthKind kind) { return kind == SynthKind::frequency ? "frequency" : "severity"; }

SynthKind parse_synth_kind(const std::string& text) {
  if (text == "frequency") return SynthKind::frequency;
  if (text == "severity") return SynthKind::severity;
  throw ValidationError("unknown synth kind '" + text + "' (expected frequency or severity)");
}

namespace {

std::string to_string(ShapeKind shape) {
  switch (shape) {
    case ShapeKind::zero: return "zero";
    case ShapeKind::step: return "step";
    case ShapeKind::linear: return "linear";
    case ShapeKind::sine: return "sine";
  }
  return "zero";
}

ShapeKind parse_shape(const std::string& text) {
  if (text == "zero") return ShapeKind::zero;
  if (text == "step") return ShapeKind::step;
  if (text == "linear") return ShapeKind::linear;
  if (text == "sine") return ShapeKind::sine;
  throw ValidationError("synth: unknown shape '" + text + "'");
}

const SynthFeature& find_feature(const SynthSpec& spec, const std::string& name) {
  for (const auto& f : spec.features) {
    if (f.name == name) return f;
  }
  throw ValidationError("synth: unknown feature '" + name + "'");
}

double unit_scale(const SynthFeature& f, double x) { return 2.0 * (x - f.low) / (f.high - f.low) - 1.0; }

}  // namespace

double SynthFeature::raw(double x) const {
  switch (shape) {
    case ShapeKind::zero: return 0.0;
    case ShapeKind::step: {
      const auto k = static_cast<std::size_t>(std::lower_bound(cuts.begin(), cuts.end(), x) - cuts.begin());
      return values[k];
    }
    case ShapeKind::linear: return slope * x;
    case ShapeKind::sine: return amplitude * std::sin(2.0 * std::numbers::pi * periods * (x - low) / (high - low));
  }
  return 0.0;
}

double SynthFeature::raw(const std::string& label) const {
  for (std::size_t k = 0; k < levels.size(); ++k) {
    if (levels[k] == label) return effects[k];
  }
  throw ValidationError("synth: feature '" + name + "' has no level '" + label + "'");
}

double SynthFeature::expected_raw() const {
  if (kind == Kind::categorical) {
    double total = 0.0;
    double mass = 0.0;
    for (std::size_t k = 0; k < levels.size(); ++k) {
      total += probs[k] * effects[k];
      mass += probs[k];
    }
    return total / mass;
  }
  const double width = high - low;
  switch (shape) {
    case ShapeKind::zero: return 0.0;
    case ShapeKind::step: {
      double total = 0.0;
      double lo = low;
      for (std::size_t k = 0; k <= cuts.size(); ++k) {
        const double hi = k < cuts.size() ? std::clamp(cuts[k], low, high) : high;
        if (hi > lo) total += values[k] * (hi - lo);
        lo = std::max(lo, hi);
      }
      return total / width;
    }
    case ShapeKind::linear: return slope * 0.5 * (low + high);
    case ShapeKind::sine: {
      const double w = 2.0 * std::numbers::pi * periods;
      return amplitude * (1.0 - std::cos(w)) / w;
    }
  }
  return 0.0;
}

void SynthSpec::validate() const {
  auto fail = [](const std::string& what) { throw ValidationError("synth spec: " + what); };
  if (n_rows < 1) fail("rows must be at least 1");
  if (features.empty()) fail("needs at least one feature");
  if (!std::isfinite(intercept)) fail("intercept must be finite");
  std::vector<std::string> names;
  for (const auto& f : features) {
    if (f.name.empty()) fail("feature names must be non-empty");
    if (f.name == "y" || f.name == "exposure") fail("feature name '" + f.name + "' is reserved");
    if (std::find(names.begin(), names.end(), f.name) != names.end()) fail("duplicate feature '" + f.name + "'");
    names.push_back(f.name);
    if (f.kind == Kind::categorical) {
      if (f.levels.empty()) fail(f.name + ": categorical feature needs levels");
      if (f.probs.size() != f.levels.size() || f.effects.size() != f.levels.size()) {
        fail(f.name + ": levels, probs and effects must have equal length");
      }
      for (double p : f.probs) {
        if (!(p >= 0.0) || !std::isfinite(p)) fail(f.name + ": probabilities must be non-negative");
      }
      continue;
    }
    if (!(f.high > f.low) || !std::isfinite(f.low) || !std::isfinite(f.high)) fail(f.name + ": need low < high");
    if (f.shape == ShapeKind::step) {
      if (f.values.size() != f.cuts.size() + 1) fail(f.name + ": step needs one more value than cuts");
      if (!std::is_sorted(f.cuts.begin(), f.cuts.end())) fail(f.name + ": step cuts must be sorted");
    }
  }
  if (interaction) {
    const auto& a = find_feature(*this, interaction->first);
    const auto& b = find_feature(*this, interaction->second);
    if (a.name == b.name) fail("interaction needs two different features");
    if (a.kind != Kind::continuous || b.kind != Kind::continuous) fail("interaction features must be continuous");
  }
}

nlohmann::json SynthSpec::to_json() const {
  nlohmann::json j;
  j["kind"] = to_string(kind);
  j["rows"] = n_rows;
  j["seed"] = seed;
  j["intercept"] = intercept;
  j["centered"] = centered;
  auto features_json = nlohmann::json::array();
  for (const auto& f : features) {
    nlohmann::json fj;
    fj["name"] = f.name;
    fj["kind"] = ebm::to_string(f.kind);
    if (f.kind == Kind::categorical) {
      fj["levels"] = f.levels;
      fj["probs"] = f.probs;
      fj["effects"] = f.effects;
    } else {
      fj["low"] = f.low;
      fj["high"] = f.high;
      fj["shape"] = to_string(f.shape);
      if (f.shape == ShapeKind::step) {
        fj["cuts"] = f.cuts;
        fj["values"] = f.values;
      } else if (f.shape == ShapeKind::linear) {
        fj["slope"] = f.slope;
      } else if (f.shape == ShapeKind::sine) {
        fj["amplitude"] = f.amplitude;
        fj["periods"] = f.periods;
      }
    }
    fj["offset"] = f.offset;
    features_json.push_back(fj);
  }
  j["features"] = features_json;
  if (interaction) {
    j["interaction"] = {
        {"first", interaction->first}, {"second", interaction->second}, {"amplitude", interaction->amplitude}};
  }
  return j;
}

SynthSpec SynthSpec::from_json(const nlohmann::json& j) {
  SynthSpec spec;
  try {
    if (j.contains("kind")) spec.kind = parse_synth_kind(j.at("kind").get<std::string>());
    if (j.contains("rows")) spec.n_rows = j.at("rows").get<std::size_t>();
    if (j.contains("seed")) spec.seed = j.at("seed").get<std::uint64_t>();
    spec.intercept = j.value("intercept", 0.0);
    spec.centered = j.value("centered", false);
    for (const auto& fj : j.at("features")) {
      SynthFeature f;
      f.name = fj.at("name").get<std::string>();
      f.kind = parse_kind(fj.value("kind", std::string("continuous")));
      if (f.kind == Kind::categorical) {
        f.levels = fj.at("levels").get<std::vector<std::string>>();
        f.probs = fj.contains("probs") ? fj.at("probs").get<std::vector<double>>()
                                       : std::vector<double>(f.levels.size(), 1.0);
        f.effects = fj.contains("effects") ? fj.at("effects").get<std::vector<double>>()
                                           : std::vector<double>(f.levels.size(), 0.0);
      } else {
        f.low = fj.value("low", 0.0);
        f.high = fj.value("high", 1.0);
        f.shape = parse_shape(fj.value("shape", std::string("zero")));
        f.cuts = fj.value("cuts", std::vector<double>{});
        f.values = fj.value("values", std::vector<double>{});
        f.slope = fj.value("slope", 0.0);
        f.amplitude = fj.value("amplitude", 0.0);
        f.periods = fj.value("periods", 1.0);
      }
      f.offset = fj.value("offset", 0.0);
      spec.features.push_back(std::move(f));
    }
    if (j.contains("interaction") && !j.at("interaction").is_null()) {
      const auto& ij = j.at("interaction");
      spec.interaction = SynthInteraction{ij.at("first").get<std::string>(), ij.at("second").get<std::string>(),
                                          ij.at("amplitude").get<double>()};
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("synth spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

SynthSpec SynthSpec::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open synth spec '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return from_json(j);
}

SynthSpec SynthSpec::default_spec(SynthKind kind) {
  SynthSpec spec;
  spec.kind = kind;
  spec.intercept = kind == SynthKind::frequency ? -1.5 : 7.0;
  auto continuous = [](std::string name, double low, double high, ShapeKind shape) {
    SynthFeature f;
    f.name = std::move(name);
    f.low = low;
    f.high = high;
    f.shape = shape;
    return f;
  };
  SynthFeature age = continuous("age", 18.0, 80.0, ShapeKind::step);
  age.cuts = {25.0, 40.0, 65.0};
  age.values = {0.4, 0.1, 0.0, 0.25};
  SynthFeature power = continuous("power", 0.0, 1.0, ShapeKind::linear);
  power.slope = 0.6;
  SynthFeature density = continuous("density", 0.0, 10.0, ShapeKind::sine);
  density.amplitude = 0.2;
  SynthFeature noise = continuous("noise", 0.0, 1.0, ShapeKind::zero);
  SynthFeature region;
  region.name = "region";
  region.kind = Kind::categorical;
  region.levels = {"north", "south", "east", "west"};
  region.probs = {0.4, 0.3, 0.2, 0.1};
  region.effects = {0.0, 0.15, -0.1, 0.3};
  spec.features = {age, power, density, noise, region};
  return spec;
}

SynthSpec center_spec(const SynthSpec& spec) {
  SynthSpec out = spec;
  if (out.centered) return out;
  for (auto& f : out.features) {
    const double m = f.expected_raw() - f.offset;
    f.offset += m;
    out.intercept += m;
  }
  out.centered = true;
  return out;
}

FeatureSchema synth_schema(const SynthSpec& spec) {
  std::vector<SchemaEntry> entries;
  for (const auto& f : spec.features) entries.push_back({f.name, Role::feature, f.kind});
  if (spec.kind == SynthKind::frequency) entries.push_back({"exposure", Role::exposure, Kind::continuous});
  entries.push_back({"y", Role::target, Kind::continuous});
  return FeatureSchema(std::move(entries));
}

SynthResult synth_generate(const SynthSpec& input) {
  input.validate();
  SynthResult result;
  result.truth = center_spec(input);
  const SynthSpec& spec = result.truth;
  const std::size_t n = spec.n_rows;
  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<Column> columns(spec.features.size());
  std::vector<std::discrete_distribution<int>> pickers;
  for (std::size_t j = 0; j < spec.features.size(); ++j) {
    const auto& f = spec.features[j];
    columns[j].name = f.name;
    columns[j].kind = f.kind;
    if (f.kind == Kind::categorical) {
      columns[j].labels = f.levels;
      columns[j].codes.reserve(n);
      pickers.emplace_back(f.probs.begin(), f.probs.end());
    } else {
      columns[j].values.reserve(n);
      pickers.emplace_back();
    }
  }
  std::vector<double> exposure;
  std::vector<double> target;
  exposure.reserve(n);
  target.reserve(n);
  result.true_score.reserve(n);
  std::size_t ia = 0;
  std::size_t ib = 0;
  if (spec.interaction) {
    for (std::size_t j = 0; j < spec.features.size(); ++j) {
      if (spec.features[j].name == spec.interaction->first) ia = j;
      if (spec.features[j].name == spec.interaction->second) ib = j;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    double score = spec.intercept;
    for (std::size_t j = 0; j < spec.features.size(); ++j) {
      const auto& f = spec.features[j];
      if (f.kind == Kind::categorical) {
        const int code = pickers[j](rng);
        columns[j].codes.push_back(code);
        score += f.effects[static_cast<std::size_t>(code)] - f.offset;
      } else {
        const double x = f.low + (f.high - f.low) * unit(rng);
        columns[j].values.push_back(x);
        score += f.raw(x) - f.offset;
      }
    }
    if (spec.interaction) {
      score += spec.interaction->amplitude * unit_scale(spec.features[ia], columns[ia].values.back()) *
               unit_scale(spec.features[ib], columns[ib].values.back());
    }
    result.true_score.push_back(score);
    const double mean = std::exp(score);
    if (spec.kind == SynthKind::frequency) {
      const double e = 1.0 - unit(rng);
      exposure.push_back(e);
      std::poisson_distribution<long long> draw(e * mean);
      target.push_back(static_cast<double>(draw(rng)));
    } else {
      exposure.push_back(1.0);
      std::gamma_distribution<double> draw(2.0, mean / 2.0);
      target.push_back(draw(rng));
    }
  }
  // Label tables follow first appearance like every loaded dataset.
  for (auto& column : columns) {
    if (column.kind != Kind::categorical) continue;
    std::vector<std::int32_t> remap(column.labels.size(), -1);
    std::vector<std::string> labels;
    for (auto& code : column.codes) {
      auto& m = remap[static_cast<std::size_t>(code)];
      if (m < 0) {
        m = static_cast<std::int32_t>(labels.size());
        labels.push_back(column.labels[static_cast<std::size_t>(code)]);
      }
      code = m;
    }
    column.labels = std::move(labels);
  }
  result.data = Dataset(synth_schema(spec), std::move(columns), std::move(target), std::move(exposure));
  return result;
}

std::vector<double> true_shape(const SynthSpec& truth, const Dataset& data, const std::string& feature) {
  const SynthFeature& f = find_feature(truth, feature);
  const Column& column = data.column(feature);
  std::vector<double> out(data.n_rows());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (f.kind == Kind::categorical ? f.raw(column.label_at(i)) : f.raw(column.values[i])) - f.offset;
  }
  return out;
}

std::vector<double> true_scores(const SynthSpec& truth, const Dataset& data) {
  std::vector<double> out(data.n_rows(), truth.intercept);
  for (const auto& f : truth.features) {
    const auto shape = true_shape(truth, data, f.name);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += shape[i];
  }
  if (truth.interaction) {
    const auto& fa = find_feature(truth, truth.interaction->first);
    const auto& fb = find_feature(truth, truth.interaction->second);
    const auto& a = data.column(fa.name).values;
    const auto& b = data.column(fb.name).values;
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] += truth.interaction->amplitude * unit_scale(fa, a[i]) * unit_scale(fb, b[i]);
    }
  }
  return out;
}

}  // namespace ebm
