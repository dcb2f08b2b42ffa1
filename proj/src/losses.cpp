#include "uiwf/losses.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "uiwf/error.hpp"

namespace uiwf {

std::vector<int> encode_classes(const std::vector<LevelKey>& keys) {
  std::map<LevelKey, int> ids;
  std::vector<int> out;
  out.reserve(keys.size());
  for (const auto& k : keys) {
    const auto [it, inserted] = ids.emplace(k, static_cast<int>(ids.size()));
    out.push_back(it->second);
  }
  return out;
}

SupConResult supcon_loss(const ContrastiveBatch& batch) {
  if (!batch.embeddings) throw InvalidArgument("contrastive batch has no embeddings");
  const Matrix& f = *batch.embeddings;
  const std::size_t n = f.rows, d = f.cols;
  if (n < 2) throw InvalidArgument("contrastive loss needs at least 2 samples");
  if (batch.classes.size() != n) throw DimensionMismatch("one class id per embedding row required");
  if (!(batch.temperature > 0.0)) throw InvalidArgument("temperature must be > 0");
  for (const auto v : f.data)
    if (!std::isfinite(v)) throw InvalidArgument("non-finite embedding value");

  const double inv_tau = 1.0 / batch.temperature;
  SupConResult out;
  out.grad = Matrix(n, d);
  std::vector<double> logits(n), coeff(n);
  std::size_t contributing = 0;

  for (std::size_t i = 0; i < n; ++i) {
    std::size_t positives = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i && batch.classes[j] == batch.classes[i]) ++positives;
    if (positives == 0) {
      ++out.skipped_anchors;
      continue;
    }
    ++contributing;

    double max_logit = -INFINITY;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      logits[j] = dot(f.row(i), f.row(j)) * inv_tau;
      max_logit = std::max(max_logit, logits[j]);
    }
    double denom = 0.0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) denom += std::exp(logits[j] - max_logit);
    const double log_denom = max_logit + std::log(denom);

    // l_i = log_denom - mean over positives of logit_ip
    double positive_sum = 0.0;
    const double inv_pos = 1.0 / static_cast<double>(positives);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) {
        coeff[j] = 0.0;
        continue;
      }
      const bool positive = batch.classes[j] == batch.classes[i];
      if (positive) positive_sum += logits[j];
      coeff[j] = std::exp(logits[j] - log_denom) - (positive ? inv_pos : 0.0);
    }
    out.loss += log_denom - positive_sum * inv_pos;

    // d logit_ij / d f_i = f_j / tau and d logit_ij / d f_j = f_i / tau.
    auto gi = out.grad.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i || coeff[j] == 0.0) continue;
      const double c = coeff[j] * inv_tau;
      const auto fj = f.row(j);
      const auto fi = f.row(i);
      auto gj = out.grad.row(j);
      for (std::size_t k = 0; k < d; ++k) {
        gi[k] += c * fj[k];
        gj[k] += c * fi[k];
      }
    }
  }
  out.mean_loss = contributing ? out.loss / static_cast<double>(contributing) : 0.0;
  return out;
}

SHLConfig SHLConfig::single_level() {
  SHLConfig c;
  c.levels = {Level::SVC};
  c.weights = {0.0, 0.0, 1.0};
  return c;
}

SHLConfig SHLConfig::two_level() {
  SHLConfig c;
  c.levels = {Level::SV, Level::SVC};
  c.weights = {0.0, 0.5, 0.5};
  return c;
}

SHLConfig SHLConfig::three_level() {
  SHLConfig c;
  c.levels = {Level::S, Level::SV, Level::SVC};
  c.weights = {0.2, 0.4, 0.4};
  return c;
}

bool SHLConfig::uses(Level l) const noexcept {
  return std::find(levels.begin(), levels.end(), l) != levels.end();
}

void SHLConfig::validate() const {
  if (levels.empty()) throw InvalidArgument("SHL needs at least one level");
  for (std::size_t i = 0; i < levels.size(); ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (levels[i] == levels[j]) throw InvalidArgument("SHL level listed twice");
  for (const auto l : levels)
    if (!std::isfinite(weight(l)) || weight(l) < 0.0)
      throw InvalidArgument("SHL weights must be finite and non-negative");
  if (!(temperature > 0.0)) throw InvalidArgument("temperature must be > 0");
}

SHLResult shl_loss(std::span<const LevelBatch> batches, const SHLConfig& config) {
  config.validate();
  if (batches.size() != config.levels.size())
    throw InvalidArgument("expected one batch per SHL level (" +
                          std::to_string(config.levels.size()) + "), got " +
                          std::to_string(batches.size()));
  for (const auto l : config.levels) {
    const auto count = std::count_if(batches.begin(), batches.end(),
                                     [l](const LevelBatch& b) { return b.level == l; });
    if (count != 1)
      throw InvalidArgument("no unique batch for level " + std::string(to_string(l)));
  }
  const std::size_t n = batches.front().batch.classes.size();
  for (const auto& b : batches)
    if (b.batch.classes.size() != n || !b.batch.embeddings || b.batch.embeddings->rows != n)
      throw InvalidArgument("SHL level batches must share the same sample count");

  SHLResult out;
  // Fixed level order keeps the reduction bit-stable.
  for (const auto l : kAllLevels) {
    if (!config.uses(l)) continue;
    const auto& lb = *std::find_if(batches.begin(), batches.end(),
                                   [l](const LevelBatch& b) { return b.level == l; });
    LevelLoss level{l, config.weight(l), supcon_loss(lb.batch)};
    for (auto& g : level.result.grad.data) g *= level.weight;
    out.loss += level.weight * level.result.loss;
    out.levels.push_back(std::move(level));
  }
  return out;
}

}  // namespace uiwf
