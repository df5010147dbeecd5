#include "ebm/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "ebm/error.hpp"
#include "ebm/numfmt.hpp"

namespace ebm {

std::string to_string(Role role) {
  switch (role) {
    case Role::feature: return "feature";
    case Role::target: return "target";
    case Role::exposure: return "exposure";
  }
  return "feature";
}

std::string to_string(Kind kind) { return kind == Kind::continuous ? "continuous" : "categorical"; }

Role parse_role(const std::string& text) {
  if (text == "feature") return Role::feature;
  if (text == "target") return Role::target;
  if (text == "exposure") return Role::exposure;
  throw ValidationError("unknown column role '" + text + "'");
}

Kind parse_kind(const std::string& text) {
  if (text == "continuous") return Kind::continuous;
  if (text == "categorical") return Kind::categorical;
  throw ValidationError("unknown column kind '" + text + "'");
}

// ---------------------------------------------------------------------------
// FeatureSchema

FeatureSchema::FeatureSchema(std::vector<SchemaEntry> entries) : entries_(std::move(entries)) {
  std::unordered_set<std::string> seen;
  std::size_t targets = 0;
  std::size_t exposures = 0;
  for (const auto& entry : entries_) {
    if (entry.name.empty()) throw ValidationError("schema: empty column name");
    if (!seen.insert(entry.name).second) throw ValidationError("schema: duplicate column '" + entry.name + "'");
    if (entry.role == Role::target) ++targets;
    if (entry.role == Role::exposure) ++exposures;
    if (entry.role != Role::feature && entry.kind != Kind::continuous) {
      throw ValidationError("schema: column '" + entry.name + "' must be continuous");
    }
  }
  if (targets != 1) throw ValidationError("schema: exactly one target column required");
  if (exposures > 1) throw ValidationError("schema: at most one exposure column allowed");
}

std::vector<SchemaEntry> FeatureSchema::features() const {
  std::vector<SchemaEntry> out;
  for (const auto& entry : entries_) {
    if (entry.role == Role::feature) out.push_back(entry);
  }
  return out;
}

std::size_t FeatureSchema::feature_count() const {
  return static_cast<std::size_t>(
      std::count_if(entries_.begin(), entries_.end(), [](const auto& e) { return e.role == Role::feature; }));
}

std::optional<std::size_t> FeatureSchema::feature_index(const std::string& name) const {
  std::size_t index = 0;
  for (const auto& entry : entries_) {
    if (entry.role != Role::feature) continue;
    if (entry.name == name) return index;
    ++index;
  }
  return std::nullopt;
}

const std::string& FeatureSchema::target_name() const {
  for (const auto& entry : entries_) {
    if (entry.role == Role::target) return entry.name;
  }
  throw ValidationError("schema: no target column");
}

std::optional<std::string> FeatureSchema::exposure_name() const {
  for (const auto& entry : entries_) {
    if (entry.role == Role::exposure) return entry.name;
  }
  return std::nullopt;
}

nlohmann::json FeatureSchema::to_json() const {
  auto out = nlohmann::json::array();
  for (const auto& entry : entries_) {
    out.push_back({{"name", entry.name}, {"role", to_string(entry.role)}, {"kind", to_string(entry.kind)}});
  }
  return out;
}

FeatureSchema FeatureSchema::from_json(const nlohmann::json& json) {
  if (!json.is_array()) throw ValidationError("schema: expected a JSON array of {name, role, kind}");
  std::vector<SchemaEntry> entries;
  for (const auto& item : json) {
    if (!item.is_object() || !item.contains("name")) throw ValidationError("schema: entry without a name");
    SchemaEntry entry;
    entry.name = item.at("name").get<std::string>();
    entry.role = parse_role(item.value("role", std::string("feature")));
    entry.kind = parse_kind(item.value("kind", std::string("continuous")));
    entries.push_back(std::move(entry));
  }
  return FeatureSchema(std::move(entries));
}

FeatureSchema FeatureSchema::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open schema file '" + path + "'");
  nlohmann::json json;
  try {
    in >> json;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(path + ": " + e.what());
  }
  return from_json(json);
}

void FeatureSchema::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << to_json().dump(2) << '\n';
}

// ---------------------------------------------------------------------------
// Dataset

Dataset::Dataset(FeatureSchema schema, std::vector<Column> columns, std::vector<double> target,
                 std::vector<double> exposure)
    : schema_(std::move(schema)),
      columns_(std::move(columns)),
      target_(std::move(target)),
      exposure_(std::move(exposure)) {
  const auto features = schema_.features();
  if (features.size() != columns_.size()) throw ValidationError("dataset: column count does not match schema");
  n_rows_ = exposure_.size();
  for (std::size_t j = 0; j < columns_.size(); ++j) {
    if (columns_[j].name != features[j].name || columns_[j].kind != features[j].kind) {
      throw ValidationError("dataset: column '" + columns_[j].name + "' does not match schema");
    }
    if (columns_[j].size() != n_rows_) throw ValidationError("dataset: columns differ in length");
  }
  if (!target_.empty() && target_.size() != n_rows_) throw ValidationError("dataset: target length mismatch");
  for (double e : exposure_) {
    if (!(e > 0.0) || !std::isfinite(e)) throw ValidationError("non-positive exposure");
  }
  for (double y : target_) {
    if (!(y >= 0.0) || !std::isfinite(y)) throw ValidationError("negative target");
  }
}

const Column& Dataset::column(const std::string& name) const {
  for (const auto& column : columns_) {
    if (column.name == name) return column;
  }
  throw ValidationError("unknown feature '" + name + "'");
}

namespace {

Column take_column(const Column& source, std::span<const std::size_t> rows) {
  Column out;
  out.name = source.name;
  out.kind = source.kind;
  if (source.kind == Kind::continuous) {
    out.values.reserve(rows.size());
    for (std::size_t r : rows) out.values.push_back(source.values[r]);
    return out;
  }
  std::vector<std::int32_t> remap(source.labels.size(), -1);
  out.codes.reserve(rows.size());
  for (std::size_t r : rows) {
    const auto old_code = static_cast<std::size_t>(source.codes[r]);
    if (remap[old_code] < 0) {
      remap[old_code] = static_cast<std::int32_t>(out.labels.size());
      out.labels.push_back(source.labels[old_code]);
    }
    out.codes.push_back(remap[old_code]);
  }
  return out;
}

}  // namespace

Dataset Dataset::take(std::span<const std::size_t> rows) const {
  std::vector<Column> columns;
  columns.reserve(columns_.size());
  for (const auto& column : columns_) columns.push_back(take_column(column, rows));
  std::vector<double> target;
  if (!target_.empty()) {
    target.reserve(rows.size());
    for (std::size_t r : rows) target.push_back(target_[r]);
  }
  std::vector<double> exposure;
  exposure.reserve(rows.size());
  for (std::size_t r : rows) exposure.push_back(exposure_[r]);
  return Dataset(schema_, std::move(columns), std::move(target), std::move(exposure));
}

Dataset Dataset::with_column(std::size_t feature, Column column) const {
  std::vector<Column> columns = columns_;
  columns.at(feature) = std::move(column);
  return Dataset(schema_, std::move(columns), target_, exposure_);
}

Dataset Dataset::reorder_features(std::span<const std::size_t> order) const {
  if (order.size() != columns_.size()) throw ValidationError("reorder_features: order size mismatch");
  const auto features = schema_.features();
  std::vector<SchemaEntry> entries;
  std::vector<Column> columns;
  for (std::size_t j : order) {
    entries.push_back(features.at(j));
    columns.push_back(columns_.at(j));
  }
  for (const auto& entry : schema_.entries()) {
    if (entry.role != Role::feature) entries.push_back(entry);
  }
  return Dataset(FeatureSchema(std::move(entries)), std::move(columns), target_, exposure_);
}

// ---------------------------------------------------------------------------
// CSV

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          current.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        current.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(std::move(current));
      current.clear();
    } else if (c != '\r') {
      current.push_back(c);
    }
  }
  fields.push_back(std::move(current));
  return fields;
}

std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

namespace {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
};

CsvTable read_csv_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open data file '" + path + "'");
  CsvTable table;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty() || line == "\r") continue;
    if (table.header.empty()) {
      if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM
      table.header = split_csv_line(line);
      continue;
    }
    auto fields = split_csv_line(line);
    if (fields.size() != table.header.size()) {
      throw ValidationError(path + ":" + std::to_string(line_number) + ": expected " +
                            std::to_string(table.header.size()) + " fields, found " + std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
    table.line_numbers.push_back(line_number);
  }
  if (table.header.empty()) throw ValidationError(path + ": empty file");
  return table;
}

std::optional<std::size_t> find_header(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  return std::nullopt;
}

}  // namespace

Dataset load_csv(const std::string& path, const FeatureSchema& schema, const LoadOptions& options) {
  const CsvTable table = read_csv_table(path);
  const std::size_t n = table.rows.size();
  auto where = [&](std::size_t row) { return path + ":" + std::to_string(table.line_numbers[row]) + ": "; };
  auto require = [&](const std::string& name) {
    auto index = find_header(table.header, name);
    if (!index) throw ValidationError(path + ": missing column '" + name + "'");
    return *index;
  };
  auto numeric_cell = [&](std::size_t row, std::size_t col, const std::string& name) {
    double value = 0.0;
    if (!try_parse_real(table.rows[row][col], value)) {
      throw ValidationError(where(row) + "non-numeric value '" + table.rows[row][col] + "' in column '" + name + "'");
    }
    return value;
  };

  std::vector<Column> columns;
  for (const auto& entry : schema.features()) {
    const std::size_t col = require(entry.name);
    Column column;
    column.name = entry.name;
    column.kind = entry.kind;
    if (entry.kind == Kind::continuous) {
      column.values.reserve(n);
      for (std::size_t r = 0; r < n; ++r) column.values.push_back(numeric_cell(r, col, entry.name));
    } else {
      std::unordered_map<std::string, std::int32_t> codes;
      column.codes.reserve(n);
      for (std::size_t r = 0; r < n; ++r) {
        std::string label = table.rows[r][col];
        if (label.empty()) label = kMissingLabel;
        auto [it, inserted] = codes.try_emplace(label, static_cast<std::int32_t>(column.labels.size()));
        if (inserted) column.labels.push_back(label);
        column.codes.push_back(it->second);
      }
    }
    columns.push_back(std::move(column));
  }

  std::vector<double> target;
  const auto target_col = find_header(table.header, schema.target_name());
  if (target_col) {
    target.reserve(n);
    for (std::size_t r = 0; r < n; ++r) {
      const double y = numeric_cell(r, *target_col, schema.target_name());
      if (y < 0.0) throw ValidationError(where(r) + "negative target");
      target.push_back(y);
    }
  } else if (options.require_target) {
    throw ValidationError(path + ": missing column '" + schema.target_name() + "'");
  }

  std::vector<double> exposure(n, 1.0);
  if (auto name = schema.exposure_name()) {
    const auto col = find_header(table.header, *name);
    if (col) {
      for (std::size_t r = 0; r < n; ++r) {
        const double e = numeric_cell(r, *col, *name);
        if (!(e > 0.0)) throw ValidationError(where(r) + "non-positive exposure");
        exposure[r] = e;
      }
    } else if (options.require_target) {
      throw ValidationError(path + ": missing column '" + *name + "'");
    }
  }
  return Dataset(schema, std::move(columns), std::move(target), std::move(exposure));
}

std::string to_csv(const Dataset& data) {
  std::ostringstream out;
  const auto& entries = data.schema().entries();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (i) out << ',';
    out << csv_escape(entries[i].name);
  }
  out << '\n';
  std::vector<const Column*> by_entry;
  for (const auto& entry : entries) {
    by_entry.push_back(entry.role == Role::feature ? &data.column(entry.name) : nullptr);
  }
  for (std::size_t r = 0; r < data.n_rows(); ++r) {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      if (i) out << ',';
      const auto& entry = entries[i];
      if (entry.role == Role::target) {
        if (data.has_target()) out << format_real(data.target()[r]);
      } else if (entry.role == Role::exposure) {
        out << format_real(data.exposure()[r]);
      } else if (entry.kind == Kind::continuous) {
        out << format_real(by_entry[i]->values[r]);
      } else {
        out << csv_escape(by_entry[i]->label_at(r));
      }
    }
    out << '\n';
  }
  return out.str();
}

void write_csv(const Dataset& data, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write '" + path + "'");
  out << to_csv(data);
}

FeatureSchema infer_schema(const std::string& path, const std::string& target,
                           const std::optional<std::string>& exposure) {
  const CsvTable table = read_csv_table(path);
  if (!find_header(table.header, target)) throw ValidationError(path + ": missing target column '" + target + "'");
  if (exposure && !find_header(table.header, *exposure)) {
    throw ValidationError(path + ": missing exposure column '" + *exposure + "'");
  }
  std::vector<SchemaEntry> entries;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    SchemaEntry entry;
    entry.name = table.header[c];
    if (entry.name == target) {
      entry.role = Role::target;
    } else if (exposure && entry.name == *exposure) {
      entry.role = Role::exposure;
    } else {
      double ignored = 0.0;
      const bool numeric = std::all_of(table.rows.begin(), table.rows.end(),
                                       [&](const auto& row) { return try_parse_real(row[c], ignored); });
      entry.kind = numeric && !table.rows.empty() ? Kind::continuous : Kind::categorical;
    }
    entries.push_back(std::move(entry));
  }
  return FeatureSchema(std::move(entries));
}

std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction, std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ValidationError("split: train fraction must lie in (0, 1)");
  }
  const std::size_t n = data.n_rows();
  if (n < 2) throw ValidationError("split: need at least 2 rows");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  auto n_train = static_cast<std::size_t>(std::llround(train_fraction * static_cast<double>(n)));
  n_train = std::clamp<std::size_t>(n_train, 1, n - 1);
  const std::span<const std::size_t> all(order);
  return {data.take(all.first(n_train)), data.take(all.subspan(n_train))};
}

}  // namespace ebm
