#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "uiwf/dataset.hpp"
#include "uiwf/labels.hpp"
#include "uiwf/metrics.hpp"
#include "uiwf/model.hpp"

namespace uiwf {

struct LevelMetrics {
  Level level = Level::SVC;
  std::size_t num_classes = 0;  // distinct keys among the evaluated frames (k for K-means)
  double ami = 0.0;
  RetrievalScores retrieval;
};

struct MetricsReport {
  Level head = Level::SVC;
  std::size_t database_size = 0;
  std::size_t query_size = 0;
  std::vector<LevelMetrics> levels;
  // Query/nearest-neighbour pairs whose keys violate the prefix property.
  std::size_t hierarchy_violations = 0;

  const LevelMetrics& at(Level level) const;
};

struct EvalOptions {
  std::vector<Level> levels{Level::SVC};
  Level head = Level::SVC;
  std::uint64_t seed = 0;
  KMeansOptions kmeans;
  ImageSource source;  // defaults to PNGs under the manifest root
  int workers = 1;
};

// Embeds every test frame through one head (no augmentation), splits the
// test set into database/query halves by video, and scores each level.
MetricsReport evaluate(const ModelParams& params, const DatasetManifest& manifest,
                       const EvalOptions& options);

// Same, from precomputed embeddings aligned with `records`.
MetricsReport evaluate_embeddings(const Matrix& embeddings, const std::vector<FrameRecord>& records,
                                  const EvalOptions& options);

nlohmann::json to_json(const MetricsReport& report);

// Writes <stem>.bin (rows x cols float64 little-endian, row-major) and
// <stem>.json (shape, dtype, head and one label entry per row).
void export_embeddings(const Matrix& embeddings, const std::vector<FrameRecord>& records,
                       Level head, const std::filesystem::path& stem);

}  // namespace uiwf
