#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "uiwf/dataset.hpp"
#include "uiwf/losses.hpp"
#include "uiwf/model.hpp"

namespace uiwf {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

struct AdamState {
  ParamSet first_moment;
  ParamSet second_moment;
  std::uint64_t step = 0;

  static AdamState for_params(const ParamSet& params);
};

// Bias-corrected Adam update in place. A gradient containing a non-finite
// value leaves params and state untouched and returns false.
bool adam_step(ParamSet& params, const ParamSet& grads, AdamState& state,
               const AdamConfig& config);

struct TrainConfig {
  int epochs = 200;
  int batch_size = 64;
  AdamConfig adam;
  SHLConfig shl = SHLConfig::three_level();  // carries the temperature
  std::uint64_t seed = 0;
  ModelConfig model;
  PreprocessConfig preprocess;
  int checkpoint_every = 0;  // 0: only the final checkpoint

  void validate() const;
};

struct StepResult {
  SHLResult loss;
  bool applied = false;
};

// One optimisation step: forward through the shared backbone, every head,
// SHL over the configured levels, backward, Adam.
StepResult train_step(ModelParams& params, AdamState& state, const Batch& batch,
                      const std::vector<ChainLabel>& labels, const TrainConfig& config,
                      int workers = 1);

struct LossLogRow {
  int epoch = 0;
  std::string level;  // "s", "sv", "svc" or "shl" for the weighted total
  double loss = 0.0;  // mean over the epoch's batches
  std::size_t skipped_anchors = 0;

  friend bool operator==(const LossLogRow&, const LossLogRow&) = default;
};

std::string loss_log_csv(const std::vector<LossLogRow>& log);

struct TrainOptions {
  std::filesystem::path out_dir;  // empty: nothing written
  ImageSource source;             // defaults to reading PNGs under the manifest root
  int workers = 1;
  std::optional<ModelParams> initial;  // overrides seeded initialisation
  std::function<void(int epoch, double shl_loss)> on_epoch;
};

struct TrainResult {
  ModelParams params;
  AdamState adam;
  std::vector<LossLogRow> log;
  std::size_t skipped_steps = 0;
};

TrainResult train(const DatasetManifest& manifest, const TrainConfig& config,
                  const TrainOptions& options = {});

}  // namespace uiwf
