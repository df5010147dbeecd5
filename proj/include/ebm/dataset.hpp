#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace ebm {

enum class Role { feature, target, exposure };
enum class Kind { continuous, categorical };

std::string to_string(Role role);
std::string to_string(Kind kind);
Role parse_role(const std::string& text);
Kind parse_kind(const std::string& text);

// Reserved label for empty categorical cells.
inline constexpr const char* kMissingLabel = "__missing__";

struct SchemaEntry {
  std::string name;
  Role role = Role::feature;
  Kind kind = Kind::continuous;

  bool operator==(const SchemaEntry&) const = default;
};

// Column declarations. Exactly one target, at most one exposure column,
// unique names. Construction validates.
class FeatureSchema {
 public:
  FeatureSchema() = default;
  explicit FeatureSchema(std::vector<SchemaEntry> entries);

  const std::vector<SchemaEntry>& entries() const { return entries_; }
  // Feature entries in declaration order.
  std::vector<SchemaEntry> features() const;
  std::size_t feature_count() const;
  std::optional<std::size_t> feature_index(const std::string& name) const;
  const std::string& target_name() const;
  std::optional<std::string> exposure_name() const;

  nlohmann::json to_json() const;
  static FeatureSchema from_json(const nlohmann::json& json);
  static FeatureSchema load(const std::string& path);
  void save(const std::string& path) const;

  bool operator==(const FeatureSchema&) const = default;

 private:
  std::vector<SchemaEntry> entries_;
};

// One feature column. Continuous columns use `values`; categorical columns
// store per-row codes into `labels` (labels ordered by first appearance).
struct Column {
  std::string name;
  Kind kind = Kind::continuous;
  std::vector<double> values;
  std::vector<std::int32_t> codes;
  std::vector<std::string> labels;

  std::size_t size() const { return kind == Kind::continuous ? values.size() : codes.size(); }
  const std::string& label_at(std::size_t row) const { return labels[static_cast<std::size_t>(codes[row])]; }
};

// Immutable-after-load columnar table. `target` may be empty for data that is
// only scored; `exposure` is always populated (1.0 when not declared).
class Dataset {
 public:
  Dataset() = default;
  Dataset(FeatureSchema schema, std::vector<Column> columns, std::vector<double> target,
          std::vector<double> exposure);

  const FeatureSchema& schema() const { return schema_; }
  std::size_t n_rows() const { return n_rows_; }
  std::size_t feature_count() const { return columns_.size(); }
  const std::vector<Column>& columns() const { return columns_; }
  const Column& column(std::size_t feature) const { return columns_.at(feature); }
  const Column& column(const std::string& name) const;
  std::span<const double> target() const { return target_; }
  std::span<const double> exposure() const { return exposure_; }
  bool has_target() const { return !target_.empty(); }
  bool has_exposure_column() const { return schema_.exposure_name().has_value(); }

  // Rows in the given order (duplicates allowed). Categorical label tables are
  // rebuilt so that label order is first appearance within the subset.
  Dataset take(std::span<const std::size_t> rows) const;

  // Copy with column `feature` rewritten; used for substitution/permutation.
  Dataset with_column(std::size_t feature, Column column) const;

  // Copy with feature columns (and schema feature entries) in a new order.
  Dataset reorder_features(std::span<const std::size_t> order) const;

 private:
  FeatureSchema schema_;
  std::size_t n_rows_ = 0;
  std::vector<Column> columns_;
  std::vector<double> target_;
  std::vector<double> exposure_;
};

struct LoadOptions {
  // When false the target column may be absent (prediction inputs).
  bool require_target = true;
};

Dataset load_csv(const std::string& path, const FeatureSchema& schema, const LoadOptions& options = {});
void write_csv(const Dataset& data, const std::string& path);
std::string to_csv(const Dataset& data);

// Guesses a schema from a CSV header + cells: numeric columns become
// continuous, everything else categorical.
FeatureSchema infer_schema(const std::string& path, const std::string& target,
                           const std::optional<std::string>& exposure);

// Seeded random partition. Sizes are round(f*n) and the remainder.
std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction, std::uint64_t seed);

// Minimal RFC-4180 style field splitting (quotes allowed around any field).
std::vector<std::string> split_csv_line(const std::string& line);
std::string csv_escape(const std::string& field);

}  // namespace ebm
