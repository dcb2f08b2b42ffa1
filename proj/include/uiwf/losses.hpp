#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <vector>

#include "uiwf/labels.hpp"
#include "uiwf/matrix.hpp"

namespace uiwf {

// One contrastive batch: embeddings (N x d), a class id per row, and the
// temperature. Every row is an anchor; its positives are the other rows with
// the same class id.
struct ContrastiveBatch {
  const Matrix* embeddings = nullptr;
  std::vector<int> classes;
  double temperature = 0.1;
};

// Dense ids in order of first appearance.
std::vector<int> encode_classes(const std::vector<LevelKey>& keys);

struct SupConResult {
  double loss = 0.0;       // raw sum over anchors
  double mean_loss = 0.0;  // loss / number of contributing anchors
  std::size_t skipped_anchors = 0;  // anchors with no positive in the batch
  Matrix grad;             // d loss / d embeddings
};

// Supervised contrastive loss summed over anchors, with its exact gradient.
// Anchors without positives contribute nothing.
SupConResult supcon_loss(const ContrastiveBatch& batch);

struct SHLConfig {
  std::vector<Level> levels{Level::S, Level::SV, Level::SVC};
  std::array<double, 3> weights{0.2, 0.4, 0.4};  // indexed by Level
  double temperature = 0.1;

  static SHLConfig single_level();  // {svc}, weight 1
  static SHLConfig two_level();     // {sv, svc}, 0.5 / 0.5
  static SHLConfig three_level();   // {s, sv, svc}, 0.2 / 0.4 / 0.4

  double weight(Level l) const noexcept { return weights[static_cast<std::size_t>(l)]; }
  void set_weight(Level l, double w) noexcept { weights[static_cast<std::size_t>(l)] = w; }
  bool uses(Level l) const noexcept;
  void validate() const;
};

struct LevelBatch {
  Level level = Level::SVC;
  ContrastiveBatch batch;
};

struct LevelLoss {
  Level level = Level::SVC;
  double weight = 0.0;
  SupConResult result;  // unweighted loss; grad already scaled by weight
};

struct SHLResult {
  double loss = 0.0;  // sum of weight * per-level loss
  std::vector<LevelLoss> levels;
};

// Split Hierarchy Loss: weighted sum of per-level supervised contrastive
// losses. One batch per configured level, all with the same sample count.
SHLResult shl_loss(std::span<const LevelBatch> batches, const SHLConfig& config);

}  // namespace uiwf
