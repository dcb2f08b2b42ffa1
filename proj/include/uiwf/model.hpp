#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "uiwf/image.hpp"
#include "uiwf/labels.hpp"
#include "uiwf/matrix.hpp"
#include "uiwf/rng.hpp"

namespace uiwf {

struct PreprocessConfig {
  int width = 112;
  int height = 64;
  double brightness = 0.1;  // shift amplitude as a fraction of 255
  double hflip_prob = 0.5;

  void validate() const;
};

// CHW planar doubles in [0, 1].
using FeatureTensor = std::vector<double>;

// Bilinear resize to the target size, then (if augment) a per-image
// brightness shift and a random horizontal flip. No cropping is ever applied.
FeatureTensor preprocess(const ImageBuffer& image, const PreprocessConfig& config, bool augment,
                         Rng& rng);
FeatureTensor flip_horizontal(const FeatureTensor& tensor, int width, int height);

// The two halves of preprocess: bilinear resampling to CHW on the 0..255
// scale, then augmentation and scaling to [0, 1].
FeatureTensor resample(const ImageBuffer& image, int width, int height);
FeatureTensor finish_preprocess(const FeatureTensor& resampled, const PreprocessConfig& config,
                                bool augment, Rng& rng);

struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> values;

  std::size_t size() const noexcept { return values.size(); }
  friend bool operator==(const Tensor&, const Tensor&) = default;
};

// Named tensors in a fixed insertion order.
class ParamSet {
public:
  Tensor& add(std::string name, std::vector<std::size_t> shape);
  Tensor& at(std::string_view name);
  const Tensor& at(std::string_view name) const;
  bool contains(std::string_view name) const noexcept;

  auto begin() noexcept { return entries_.begin(); }
  auto end() noexcept { return entries_.end(); }
  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }
  std::size_t size() const noexcept { return entries_.size(); }

  ParamSet zeros_like() const;
  void set_zero();
  bool same_layout(const ParamSet& other) const;
  bool all_finite() const;

  friend bool operator==(const ParamSet&, const ParamSet&) = default;

private:
  std::vector<std::pair<std::string, Tensor>> entries_;
};

enum class Architecture { SingleTask, MultiTask };

std::string_view to_string(Architecture a) noexcept;
Architecture architecture_from_string(std::string_view text);

struct HeadSpec {
  Level level = Level::SVC;
  int dim = 128;
  friend bool operator==(const HeadSpec&, const HeadSpec&) = default;
};

// Reference encoder: two stride-2 3x3 tanh convolutions, global average pool,
// linear map to the backbone feature. Each head is linear -> tanh -> linear
// followed by L2 normalization.
struct ModelConfig {
  int input_width = 112;
  int input_height = 64;
  int conv1_channels = 16;
  int conv2_channels = 32;
  int backbone_dim = 256;
  Architecture architecture = Architecture::MultiTask;
  std::vector<HeadSpec> heads{{Level::S, 128}, {Level::SV, 128}, {Level::SVC, 128}};

  void validate() const;
  bool has_head(Level level) const noexcept;
  int head_dim(Level level) const;
  // Head whose embeddings feed the loss term of `level`: the level's own head
  // in a multi-task model, the single svc head otherwise.
  Level loss_head(Level level) const;

  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

std::string head_param_name(Level level, std::string_view tensor);

struct ModelParams {
  ModelConfig config;
  ParamSet tensors;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// Seeded uniform fan-in initialisation. Each tensor draws from its own stream
// keyed by its name, so shared tensors initialise identically across
// architectures.
ModelParams init_params(const ModelConfig& config, std::uint64_t seed);

struct Batch {
  std::size_t count = 0;
  int width = 0;
  int height = 0;
  std::vector<double> data;  // count x 3 x height x width

  static Batch from(const std::vector<FeatureTensor>& samples, int width, int height);
  std::span<const double> sample(std::size_t i) const noexcept;
};

struct BackboneTrace {
  const Batch* batch = nullptr;
  std::vector<double> act1;    // count x C1 x H1 x W1 (post-tanh)
  std::vector<double> act2;    // count x C2 x H2 x W2 (post-tanh)
  std::vector<double> pooled;  // count x C2
};

struct HeadTrace {
  Level head = Level::SVC;
  const Matrix* features = nullptr;
  Matrix hidden;     // post-tanh
  Matrix raw;        // before normalization
  Matrix embedding;  // unit rows
};

// Backbone features, one row per sample. `workers` > 1 splits samples across
// threads; results do not depend on the worker count.
Matrix forward(const ModelParams& params, const Batch& batch, BackboneTrace* trace = nullptr,
               int workers = 1);

// Unit-norm embeddings of one head. Throws InvalidArgument if the model has
// no such head.
Matrix project(const ModelParams& params, const Matrix& features, Level head = Level::SVC,
               HeadTrace* trace = nullptr);

// Accumulates head parameter gradients into `grads` and returns d loss / d features.
Matrix project_backward(const ModelParams& params, const HeadTrace& trace,
                        const Matrix& grad_embedding, ParamSet& grads);

// Accumulates backbone parameter gradients into `grads`. Per-sample
// contributions are reduced in sample order for bit-stable results.
void backbone_backward(const ModelParams& params, const BackboneTrace& trace,
                       const Matrix& grad_features, ParamSet& grads, int workers = 1);

// Preprocess (no augmentation) and embed images through one head, in chunks.
Matrix embed_images(const ModelParams& params, std::size_t count,
                    const std::function<ImageBuffer(std::size_t)>& load, Level head = Level::SVC,
                    int workers = 1);
Matrix embed_images(const ModelParams& params, const std::vector<ImageBuffer>& images,
                    Level head = Level::SVC, int workers = 1);

}  // namespace uiwf
