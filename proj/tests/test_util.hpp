#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "ebm/binning.hpp"
#include "ebm/dataset.hpp"
#include "ebm/model.hpp"

namespace ebm::testing {

// Scratch directory removed on destruction.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("ebm_test_" + std::to_string(rd()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  std::string file(const std::string& name) const { return (path_ / name).string(); }

 private:
  std::filesystem::path path_;
};

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

inline Column continuous_column(std::string name, std::vector<double> values) {
  Column c;
  c.name = std::move(name);
  c.kind = Kind::continuous;
  c.values = std::move(values);
  return c;
}

inline Column categorical_column(std::string name, const std::vector<std::string>& cells) {
  Column c;
  c.name = std::move(name);
  c.kind = Kind::categorical;
  for (const auto& cell : cells) {
    std::size_t k = 0;
    while (k < c.labels.size() && c.labels[k] != cell) ++k;
    if (k == c.labels.size()) c.labels.push_back(cell);
    c.codes.push_back(static_cast<std::int32_t>(k));
  }
  return c;
}

// Dataset from feature columns plus target (and optional exposure).
inline Dataset make_dataset(std::vector<Column> columns, std::vector<double> target,
                            std::vector<double> exposure = {}) {
  std::vector<SchemaEntry> entries;
  for (const auto& c : columns) entries.push_back({c.name, Role::feature, c.kind});
  const bool has_exposure = !exposure.empty();
  if (has_exposure) entries.push_back({"exposure", Role::exposure, Kind::continuous});
  entries.push_back({"y", Role::target, Kind::continuous});
  const std::size_t n = columns.empty() ? target.size() : columns.front().size();
  if (!has_exposure) exposure.assign(n, 1.0);
  return Dataset(FeatureSchema(std::move(entries)), std::move(columns), std::move(target), std::move(exposure));
}

// Model with one main term per feature of `data`, bins built from `data`,
// and all scores zero.
inline EbmModel blank_model(const Dataset& data, LossKind kind, std::size_t max_bins = 16) {
  EbmModel model;
  model.schema = data.schema();
  model.objective = kind;
  for (std::size_t j = 0; j < data.feature_count(); ++j) {
    model.bins.push_back(build_bins(data.column(j), max_bins));
    const std::size_t k = model.bins.back().bin_count();
    model.mains.push_back({j, std::vector<double>(k, 0.0), std::vector<double>(k, 0.0)});
  }
  return model;
}

}  // namespace ebm::testing
