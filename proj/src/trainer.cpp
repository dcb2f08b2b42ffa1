#include "uiwf/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>

#include "uiwf/checkpoint.hpp"
#include "uiwf/error.hpp"

namespace uiwf {

void AdamConfig::validate() const {
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
    throw InvalidArgument("learning rate must be finite and >= 0");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0))
    throw InvalidArgument("Adam betas must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw InvalidArgument("Adam epsilon must be > 0");
}

AdamState AdamState::for_params(const ParamSet& params) {
  return {params.zeros_like(), params.zeros_like(), 0};
}

bool adam_step(ParamSet& params, const ParamSet& grads, AdamState& state,
               const AdamConfig& config) {
  config.validate();
  if (!params.same_layout(grads) || !params.same_layout(state.first_moment) ||
      !params.same_layout(state.second_moment))
    throw DimensionMismatch("Adam: parameter, gradient and state shapes differ");
  if (!grads.all_finite()) return false;

  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(config.beta1, t);
  const double c2 = 1.0 - std::pow(config.beta2, t);
  auto p = params.begin();
  auto g = grads.begin();
  auto m = state.first_moment.begin();
  auto v = state.second_moment.begin();
  for (; p != params.end(); ++p, ++g, ++m, ++v) {
    auto& pv = p->second.values;
    const auto& gv = g->second.values;
    auto& mv = m->second.values;
    auto& vv = v->second.values;
    for (std::size_t i = 0; i < pv.size(); ++i) {
      mv[i] = config.beta1 * mv[i] + (1.0 - config.beta1) * gv[i];
      vv[i] = config.beta2 * vv[i] + (1.0 - config.beta2) * gv[i] * gv[i];
      const double m_hat = mv[i] / c1;
      const double v_hat = vv[i] / c2;
      pv[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
  return true;
}

void TrainConfig::validate() const {
  if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
  if (batch_size < 2) throw InvalidArgument("batch size must be >= 2");
  if (checkpoint_every < 0) throw InvalidArgument("checkpoint_every must be >= 0");
  adam.validate();
  shl.validate();
  model.validate();
  preprocess.validate();
  if (preprocess.width != model.input_width || preprocess.height != model.input_height)
    throw InvalidArgument("preprocess target and model input size differ");
  for (const auto l : shl.levels) model.loss_head(l);
  if (model.architecture == Architecture::MultiTask) {
    for (const auto& h : model.heads)
      if (!shl.uses(h.level))
        throw InvalidArgument("multi-task head " + std::string(to_string(h.level)) +
                              " has no SHL level");
  }
}

StepResult train_step(ModelParams& params, AdamState& state, const Batch& batch,
                      const std::vector<ChainLabel>& labels, const TrainConfig& config,
                      int workers) {
  if (labels.size() != batch.count) throw DimensionMismatch("one label per batch sample required");
  const auto& model = params.config;

  BackboneTrace backbone;
  const Matrix features = forward(params, batch, &backbone, workers);

  std::vector<HeadTrace> heads(model.heads.size());
  for (std::size_t h = 0; h < model.heads.size(); ++h)
    project(params, features, model.heads[h].level, &heads[h]);
  auto trace_of = [&](Level head) -> const HeadTrace& {
    for (std::size_t h = 0; h < model.heads.size(); ++h)
      if (model.heads[h].level == head) return heads[h];
    throw InvalidArgument("missing head trace");
  };

  std::vector<LevelBatch> level_batches;
  for (const auto l : config.shl.levels) {
    std::vector<LevelKey> keys;
    keys.reserve(labels.size());
    for (const auto& label : labels) keys.push_back(project(label, l));
    level_batches.push_back(
        {l, {&trace_of(model.loss_head(l)).embedding, encode_classes(keys), config.shl.temperature}});
  }

  StepResult out;
  out.loss = shl_loss(level_batches, config.shl);

  ParamSet grads = params.tensors.zeros_like();
  Matrix grad_features(features.rows, features.cols);
  for (std::size_t h = 0; h < model.heads.size(); ++h) {
    const Level head = model.heads[h].level;
    Matrix grad_emb(features.rows, static_cast<std::size_t>(model.heads[h].dim));
    for (const auto& level : out.loss.levels) {
      if (model.loss_head(level.level) != head) continue;
      for (std::size_t i = 0; i < grad_emb.data.size(); ++i)
        grad_emb.data[i] += level.result.grad.data[i];
    }
    const Matrix gf = project_backward(params, heads[h], grad_emb, grads);
    for (std::size_t i = 0; i < gf.data.size(); ++i) grad_features.data[i] += gf.data[i];
  }
  backbone_backward(params, backbone, grad_features, grads, workers);
  out.applied = adam_step(params.tensors, grads, state, config.adam);
  return out;
}

std::string loss_log_csv(const std::vector<LossLogRow>& log) {
  std::string out = "epoch,level,loss,skipped_anchors\n";
  char buf[64];
  for (const auto& row : log) {
    std::snprintf(buf, sizeof buf, "%.17g", row.loss);
    out += std::to_string(row.epoch) + "," + row.level + "," + buf + "," +
           std::to_string(row.skipped_anchors) + "\n";
  }
  return out;
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

// Resampled tensors are cached when they fit in this budget.
constexpr std::size_t kCacheBudgetBytes = std::size_t{1} << 30;

}  // namespace

TrainResult train(const DatasetManifest& manifest, const TrainConfig& config,
                  const TrainOptions& options) {
  config.validate();
  const auto records = manifest.split_records(Split::Train);
  if (records.empty()) throw InvalidArgument("training split is empty");
  if (config.shl.uses(Level::SVC) &&
      std::none_of(records.begin(), records.end(),
                   [](const FrameRecord& r) { return r.context_observed; }))
    throw InvalidArgument(
        "svc level requested but no training record carries a context label "
        "(real or synthetic)");

  const ImageSource source = options.source ? options.source : disk_image_source(manifest);
  const auto& pre = config.preprocess;
  const std::size_t tensor_bytes = sizeof(double) * 3 * static_cast<std::size_t>(pre.width) * pre.height;
  const bool use_cache = tensor_bytes * records.size() <= kCacheBudgetBytes;
  std::vector<FeatureTensor> cache(use_cache ? records.size() : 0);
  auto resampled = [&](std::size_t i) -> FeatureTensor {
    if (use_cache) {
      if (cache[i].empty()) cache[i] = resample(source(records[i]), pre.width, pre.height);
      return cache[i];
    }
    return resample(source(records[i]), pre.width, pre.height);
  };

  TrainResult result{options.initial ? *options.initial
                                     : init_params(config.model, derive_seed(config.seed, "init")),
                     {}, {}, 0};
  if (result.params.config != config.model)
    throw InvalidArgument("initial parameters do not match the model config");
  result.adam = AdamState::for_params(result.params.tensors);

  if (!options.out_dir.empty()) std::filesystem::create_directories(options.out_dir);
  const std::uint64_t shuffle_seed = derive_seed(config.seed, "shuffle");
  const std::uint64_t augment_seed = derive_seed(config.seed, "augment");
  std::vector<std::size_t> order(records.size());

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    Rng rng(derive_seed(shuffle_seed, static_cast<std::uint64_t>(epoch)));
    shuffle(std::span(order), rng);

    std::array<double, 3> level_sum{};
    std::array<std::size_t, 3> skipped{};
    double shl_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t lo = 0; lo < order.size(); lo += config.batch_size) {
      const std::size_t hi = std::min(order.size(), lo + static_cast<std::size_t>(config.batch_size));
      if (hi - lo < 2) break;  // the contrastive loss needs two samples
      std::vector<FeatureTensor> samples;
      std::vector<ChainLabel> labels;
      for (std::size_t k = lo; k < hi; ++k) {
        const std::size_t i = order[k];
        Rng aug(derive_seed(augment_seed, static_cast<std::uint64_t>(epoch), i));
        samples.push_back(finish_preprocess(resampled(i), pre, true, aug));
        labels.push_back(records[i].label);
      }
      const auto batch = Batch::from(samples, pre.width, pre.height);
      const auto step = train_step(result.params, result.adam, batch, labels, config, options.workers);
      if (!step.applied) ++result.skipped_steps;
      shl_sum += step.loss.loss;
      for (const auto& level : step.loss.levels) {
        level_sum[static_cast<std::size_t>(level.level)] += level.result.loss;
        skipped[static_cast<std::size_t>(level.level)] += level.result.skipped_anchors;
      }
      ++batches;
    }

    const double denom = batches ? static_cast<double>(batches) : 1.0;
    for (const auto l : kAllLevels) {
      if (!config.shl.uses(l)) continue;
      const auto idx = static_cast<std::size_t>(l);
      result.log.push_back({epoch, std::string(to_string(l)), level_sum[idx] / denom, skipped[idx]});
    }
    std::size_t total_skipped = 0;
    for (const auto s : skipped) total_skipped += s;
    result.log.push_back({epoch, "shl", shl_sum / denom, total_skipped});
    if (options.on_epoch) options.on_epoch(epoch, shl_sum / denom);

    if (!options.out_dir.empty() && config.checkpoint_every > 0 &&
        epoch % config.checkpoint_every == 0 && epoch != config.epochs) {
      char name[64];
      std::snprintf(name, sizeof name, "checkpoint_epoch_%04d.bin", epoch);
      save_checkpoint(result.params, options.out_dir / name);
    }
  }

  if (!options.out_dir.empty()) {
    save_checkpoint(result.params, options.out_dir / "checkpoint.bin");
    write_text(options.out_dir / "metrics.csv", loss_log_csv(result.log));
  }
  return result;
}

}  // namespace uiwf
