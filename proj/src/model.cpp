#include "uiwf/model.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "uiwf/error.hpp"

namespace uiwf {

void normalize_rows(Matrix& m) {
  for (std::size_t r = 0; r < m.rows; ++r) {
    auto row = m.row(r);
    const double n = std::sqrt(dot(row, row));
    if (n > 0.0)
      for (auto& v : row) v /= n;
  }
}

// ---------------------------------------------------------------------------
// Preprocessing

void PreprocessConfig::validate() const {
  if (width < 8 || height < 8) throw InvalidArgument("preprocess target must be at least 8x8");
  if (!(brightness >= 0.0 && brightness <= 1.0))
    throw InvalidArgument("brightness amplitude must lie in [0, 1]");
  if (!(hflip_prob >= 0.0 && hflip_prob <= 1.0))
    throw InvalidArgument("flip probability must lie in [0, 1]");
}

FeatureTensor resample(const ImageBuffer& image, int w, int h) {
  if (image.empty()) throw InvalidArgument("preprocess: zero-sized image");
  if (w < 1 || h < 1) throw InvalidArgument("preprocess: target must be positive");
  const double sx = static_cast<double>(image.width) / w;
  const double sy = static_cast<double>(image.height) / h;
  const std::size_t plane = static_cast<std::size_t>(w) * h;
  FeatureTensor out(plane * 3);
  for (int y = 0; y < h; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, image.height - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, image.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < w; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, image.width - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, image.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = (1.0 - wx) * image.pixel(x0, y0)[c] + wx * image.pixel(x1, y0)[c];
        const double bot = (1.0 - wx) * image.pixel(x0, y1)[c] + wx * image.pixel(x1, y1)[c];
        out[c * plane + static_cast<std::size_t>(y) * w + x] = (1.0 - wy) * top + wy * bot;
      }
    }
  }
  return out;
}

FeatureTensor finish_preprocess(const FeatureTensor& resampled, const PreprocessConfig& config,
                                bool augment, Rng& rng) {
  config.validate();
  if (resampled.size() != static_cast<std::size_t>(3) * config.width * config.height)
    throw DimensionMismatch("resampled tensor does not match the preprocess target");
  double shift = 0.0;
  bool flip = false;
  if (augment) {
    // Both draws always happen so the stream layout does not depend on the config.
    shift = uniform_real(rng, -1.0, 1.0) * config.brightness * 255.0;
    flip = bernoulli(rng, config.hflip_prob);
  }
  FeatureTensor out(resampled.size());
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = std::clamp(resampled[i] + shift, 0.0, 255.0) / 255.0;
  if (flip) out = flip_horizontal(out, config.width, config.height);
  return out;
}

FeatureTensor preprocess(const ImageBuffer& image, const PreprocessConfig& config, bool augment,
                         Rng& rng) {
  config.validate();
  return finish_preprocess(resample(image, config.width, config.height), config, augment, rng);
}

FeatureTensor flip_horizontal(const FeatureTensor& tensor, int width, int height) {
  FeatureTensor out(tensor.size());
  const std::size_t plane = static_cast<std::size_t>(width) * height;
  const std::size_t channels = tensor.size() / plane;
  for (std::size_t c = 0; c < channels; ++c)
    for (int y = 0; y < height; ++y)
      for (int x = 0; x < width; ++x)
        out[c * plane + static_cast<std::size_t>(y) * width + x] =
            tensor[c * plane + static_cast<std::size_t>(y) * width + (width - 1 - x)];
  return out;
}

// ---------------------------------------------------------------------------
// Parameters

Tensor& ParamSet::add(std::string name, std::vector<std::size_t> shape) {
  if (contains(name)) throw InvalidArgument("duplicate tensor '" + name + "'");
  std::size_t n = 1;
  for (const auto d : shape) n *= d;
  entries_.emplace_back(std::move(name), Tensor{std::move(shape), std::vector<double>(n, 0.0)});
  return entries_.back().second;
}

Tensor& ParamSet::at(std::string_view name) {
  for (auto& [n, t] : entries_)
    if (n == name) return t;
  throw InvalidArgument("no tensor named '" + std::string(name) + "'");
}

const Tensor& ParamSet::at(std::string_view name) const {
  return const_cast<ParamSet*>(this)->at(name);
}

bool ParamSet::contains(std::string_view name) const noexcept {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const auto& e) { return e.first == name; });
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out = *this;
  out.set_zero();
  return out;
}

void ParamSet::set_zero() {
  for (auto& [name, t] : entries_) std::fill(t.values.begin(), t.values.end(), 0.0);
}

bool ParamSet::same_layout(const ParamSet& other) const {
  if (entries_.size() != other.entries_.size()) return false;
  for (std::size_t i = 0; i < entries_.size(); ++i)
    if (entries_[i].first != other.entries_[i].first ||
        entries_[i].second.shape != other.entries_[i].second.shape)
      return false;
  return true;
}

bool ParamSet::all_finite() const {
  for (const auto& [name, t] : entries_)
    for (const auto v : t.values)
      if (!std::isfinite(v)) return false;
  return true;
}

std::string_view to_string(Architecture a) noexcept {
  return a == Architecture::SingleTask ? "single-task" : "multi-task";
}

Architecture architecture_from_string(std::string_view text) {
  if (text == "single-task") return Architecture::SingleTask;
  if (text == "multi-task") return Architecture::MultiTask;
  throw InvalidArgument("unknown architecture '" + std::string(text) + "'");
}

void ModelConfig::validate() const {
  if (input_width < 8 || input_height < 8) throw InvalidArgument("model input must be >= 8x8");
  if (conv1_channels < 1 || conv2_channels < 1 || backbone_dim < 1)
    throw InvalidArgument("layer widths must be positive");
  if (heads.empty()) throw InvalidArgument("model needs at least one projection head");
  for (std::size_t i = 0; i < heads.size(); ++i) {
    if (heads[i].dim < 1) throw InvalidArgument("head dimensions must be positive");
    for (std::size_t j = 0; j < i; ++j)
      if (heads[j].level == heads[i].level) throw InvalidArgument("duplicate projection head");
  }
  if (architecture == Architecture::SingleTask &&
      (heads.size() != 1 || heads.front().level != Level::SVC))
    throw InvalidArgument("a single-task model has exactly one svc head");
}

bool ModelConfig::has_head(Level level) const noexcept {
  return std::any_of(heads.begin(), heads.end(), [&](const HeadSpec& h) { return h.level == level; });
}

int ModelConfig::head_dim(Level level) const {
  for (const auto& h : heads)
    if (h.level == level) return h.dim;
  throw InvalidArgument("model has no " + std::string(to_string(level)) + " head");
}

Level ModelConfig::loss_head(Level level) const {
  if (architecture == Architecture::SingleTask) return Level::SVC;
  if (!has_head(level))
    throw InvalidArgument("multi-task model has no head for loss level " +
                          std::string(to_string(level)));
  return level;
}

std::string head_param_name(Level level, std::string_view tensor) {
  return "head_" + std::string(to_string(level)) + "." + std::string(tensor);
}

namespace {

int conv_out(int n) { return (n - 1) / 2 + 1; }

void init_uniform(Tensor& t, std::size_t fan_in, std::uint64_t seed, std::string_view name) {
  Rng rng(derive_seed(seed, name));
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  for (auto& v : t.values) v = uniform_real(rng, -bound, bound);
}

}  // namespace

ModelParams init_params(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  ModelParams p{config, {}};
  const auto c1 = static_cast<std::size_t>(config.conv1_channels);
  const auto c2 = static_cast<std::size_t>(config.conv2_channels);
  const auto d = static_cast<std::size_t>(config.backbone_dim);

  auto add = [&](const std::string& name, std::vector<std::size_t> shape, std::size_t fan_in) {
    init_uniform(p.tensors.add(name, std::move(shape)), fan_in, seed, name);
  };
  add("conv1.w", {c1, 3, 3, 3}, 27);
  add("conv1.b", {c1}, 27);
  add("conv2.w", {c2, c1, 3, 3}, c1 * 9);
  add("conv2.b", {c2}, c1 * 9);
  add("fc.w", {d, c2}, c2);
  add("fc.b", {d}, c2);
  for (const auto& h : config.heads) {
    const auto e = static_cast<std::size_t>(h.dim);
    add(head_param_name(h.level, "w1"), {d, d}, d);
    add(head_param_name(h.level, "b1"), {d}, d);
    add(head_param_name(h.level, "w2"), {e, d}, d);
    add(head_param_name(h.level, "b2"), {e}, d);
  }
  return p;
}

// ---------------------------------------------------------------------------
// Forward / backward

Batch Batch::from(const std::vector<FeatureTensor>& samples, int width, int height) {
  Batch b;
  b.count = samples.size();
  b.width = width;
  b.height = height;
  const std::size_t per = static_cast<std::size_t>(3) * width * height;
  b.data.reserve(per * samples.size());
  for (const auto& s : samples) {
    if (s.size() != per) throw DimensionMismatch("batch sample has the wrong size");
    b.data.insert(b.data.end(), s.begin(), s.end());
  }
  return b;
}

std::span<const double> Batch::sample(std::size_t i) const noexcept {
  const std::size_t per = static_cast<std::size_t>(3) * width * height;
  return {data.data() + i * per, per};
}

namespace {

// 3x3, stride 2, zero padding 1, tanh.
void conv_forward(const double* in, int cin, int h, int w, const Tensor& weight,
                  const Tensor& bias, double* out) {
  const int cout = static_cast<int>(weight.shape[0]);
  const int ho = conv_out(h), wo = conv_out(w);
  const std::size_t out_plane = static_cast<std::size_t>(ho) * wo;
  const std::size_t in_plane = static_cast<std::size_t>(h) * w;
  for (int co = 0; co < cout; ++co) {
    double* o = out + co * out_plane;
    std::fill(o, o + out_plane, bias.values[co]);
    for (int ci = 0; ci < cin; ++ci) {
      const double* src = in + ci * in_plane;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const double k = weight.values[((static_cast<std::size_t>(co) * cin + ci) * 3 + ky) * 3 + kx];
          for (int oy = 0; oy < ho; ++oy) {
            const int iy = 2 * oy + ky - 1;
            if (iy < 0 || iy >= h) continue;
            const double* row = src + static_cast<std::size_t>(iy) * w;
            double* orow = o + static_cast<std::size_t>(oy) * wo;
            for (int ox = 0; ox < wo; ++ox) {
              const int ix = 2 * ox + kx - 1;
              if (ix < 0 || ix >= w) continue;
              orow[ox] += k * row[ix];
            }
          }
        }
      }
    }
    for (std::size_t i = 0; i < out_plane; ++i) o[i] = std::tanh(o[i]);
  }
}

// `grad_out` holds d loss / d (post-tanh output); it is turned into the
// pre-activation gradient in place.
void conv_backward(const double* in, int cin, int h, int w, const Tensor& weight,
                   const double* out, double* grad_out, double* grad_w, double* grad_b,
                   double* grad_in) {
  const int cout = static_cast<int>(weight.shape[0]);
  const int ho = conv_out(h), wo = conv_out(w);
  const std::size_t out_plane = static_cast<std::size_t>(ho) * wo;
  const std::size_t in_plane = static_cast<std::size_t>(h) * w;
  for (int co = 0; co < cout; ++co) {
    double* g = grad_out + co * out_plane;
    const double* o = out + co * out_plane;
    double gb = 0.0;
    for (std::size_t i = 0; i < out_plane; ++i) {
      g[i] *= 1.0 - o[i] * o[i];
      gb += g[i];
    }
    grad_b[co] += gb;
    for (int ci = 0; ci < cin; ++ci) {
      const double* src = in + ci * in_plane;
      double* gsrc = grad_in ? grad_in + ci * in_plane : nullptr;
      for (int ky = 0; ky < 3; ++ky) {
        for (int kx = 0; kx < 3; ++kx) {
          const std::size_t widx = ((static_cast<std::size_t>(co) * cin + ci) * 3 + ky) * 3 + kx;
          const double k = weight.values[widx];
          double gw = 0.0;
          for (int oy = 0; oy < ho; ++oy) {
            const int iy = 2 * oy + ky - 1;
            if (iy < 0 || iy >= h) continue;
            const double* row = src + static_cast<std::size_t>(iy) * w;
            const double* grow = g + static_cast<std::size_t>(oy) * wo;
            for (int ox = 0; ox < wo; ++ox) {
              const int ix = 2 * ox + kx - 1;
              if (ix < 0 || ix >= w) continue;
              gw += grow[ox] * row[ix];
              if (gsrc) gsrc[static_cast<std::size_t>(iy) * w + ix] += k * grow[ox];
            }
          }
          grad_w[widx] += gw;
        }
      }
    }
  }
}

struct Dims {
  int c1, c2, h0, w0, h1, w1, h2, w2, d;
  std::size_t act1, act2;
};

Dims dims_of(const ModelConfig& c, const Batch& b) {
  Dims d{};
  d.c1 = c.conv1_channels;
  d.c2 = c.conv2_channels;
  d.h0 = b.height;
  d.w0 = b.width;
  d.h1 = conv_out(d.h0);
  d.w1 = conv_out(d.w0);
  d.h2 = conv_out(d.h1);
  d.w2 = conv_out(d.w1);
  d.d = c.backbone_dim;
  d.act1 = static_cast<std::size_t>(d.c1) * d.h1 * d.w1;
  d.act2 = static_cast<std::size_t>(d.c2) * d.h2 * d.w2;
  return d;
}

template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  const std::size_t threads = std::clamp<std::size_t>(workers < 1 ? 1 : workers, 1, std::max<std::size_t>(n, 1));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  const std::size_t chunk = (n + threads - 1) / threads;
  for (std::size_t t = 0; t < threads; ++t) {
    const std::size_t lo = t * chunk, hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&fn, lo, hi] {
      for (std::size_t i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

}  // namespace

Matrix forward(const ModelParams& params, const Batch& batch, BackboneTrace* trace, int workers) {
  const auto& cfg = params.config;
  if (batch.width != cfg.input_width || batch.height != cfg.input_height)
    throw DimensionMismatch("batch is " + std::to_string(batch.width) + "x" +
                            std::to_string(batch.height) + ", model expects " +
                            std::to_string(cfg.input_width) + "x" +
                            std::to_string(cfg.input_height));
  if (batch.data.size() != batch.count * 3 * static_cast<std::size_t>(batch.width) * batch.height)
    throw DimensionMismatch("batch data size does not match its shape");

  const Dims d = dims_of(cfg, batch);
  const auto& conv1_w = params.tensors.at("conv1.w");
  const auto& conv1_b = params.tensors.at("conv1.b");
  const auto& conv2_w = params.tensors.at("conv2.w");
  const auto& conv2_b = params.tensors.at("conv2.b");
  const auto& fc_w = params.tensors.at("fc.w");
  const auto& fc_b = params.tensors.at("fc.b");

  BackboneTrace local;
  BackboneTrace& t = trace ? *trace : local;
  t.batch = &batch;
  t.act1.assign(batch.count * d.act1, 0.0);
  t.act2.assign(batch.count * d.act2, 0.0);
  t.pooled.assign(batch.count * d.c2, 0.0);
  Matrix features(batch.count, d.d);

  parallel_for(batch.count, workers, [&](std::size_t n) {
    double* a1 = t.act1.data() + n * d.act1;
    double* a2 = t.act2.data() + n * d.act2;
    double* pooled = t.pooled.data() + n * d.c2;
    conv_forward(batch.sample(n).data(), 3, d.h0, d.w0, conv1_w, conv1_b, a1);
    conv_forward(a1, d.c1, d.h1, d.w1, conv2_w, conv2_b, a2);
    const std::size_t plane = static_cast<std::size_t>(d.h2) * d.w2;
    for (int c = 0; c < d.c2; ++c) {
      double s = 0.0;
      for (std::size_t i = 0; i < plane; ++i) s += a2[c * plane + i];
      pooled[c] = s / static_cast<double>(plane);
    }
    auto out = features.row(n);
    for (int k = 0; k < d.d; ++k) {
      double s = fc_b.values[k];
      for (int c = 0; c < d.c2; ++c) s += fc_w.values[static_cast<std::size_t>(k) * d.c2 + c] * pooled[c];
      out[k] = s;
    }
  });
  return features;
}

Matrix project(const ModelParams& params, const Matrix& features, Level head, HeadTrace* trace) {
  const auto& cfg = params.config;
  if (!cfg.has_head(head))
    throw InvalidArgument("head " + std::string(to_string(head)) + " is not present in this " +
                          std::string(to_string(cfg.architecture)) + " model");
  if (features.cols != static_cast<std::size_t>(cfg.backbone_dim))
    throw DimensionMismatch("feature width does not match the backbone dimension");

  const auto& w1 = params.tensors.at(head_param_name(head, "w1"));
  const auto& b1 = params.tensors.at(head_param_name(head, "b1"));
  const auto& w2 = params.tensors.at(head_param_name(head, "w2"));
  const auto& b2 = params.tensors.at(head_param_name(head, "b2"));
  const std::size_t d = features.cols;
  const std::size_t e = w2.shape[0];
  const std::size_t n = features.rows;

  HeadTrace local;
  HeadTrace& t = trace ? *trace : local;
  t.head = head;
  t.features = &features;
  t.hidden = Matrix(n, d);
  t.raw = Matrix(n, e);
  for (std::size_t r = 0; r < n; ++r) {
    const auto f = features.row(r);
    auto hrow = t.hidden.row(r);
    for (std::size_t j = 0; j < d; ++j)
      hrow[j] = std::tanh(b1.values[j] + dot({w1.values.data() + j * d, d}, f));
    auto zrow = t.raw.row(r);
    for (std::size_t k = 0; k < e; ++k)
      zrow[k] = b2.values[k] + dot({w2.values.data() + k * d, d}, hrow);
  }
  t.embedding = t.raw;
  normalize_rows(t.embedding);
  return t.embedding;
}

Matrix project_backward(const ModelParams& params, const HeadTrace& trace,
                        const Matrix& grad_embedding, ParamSet& grads) {
  const Level head = trace.head;
  const auto& w1 = params.tensors.at(head_param_name(head, "w1"));
  const auto& w2 = params.tensors.at(head_param_name(head, "w2"));
  auto& gw1 = grads.at(head_param_name(head, "w1"));
  auto& gb1 = grads.at(head_param_name(head, "b1"));
  auto& gw2 = grads.at(head_param_name(head, "w2"));
  auto& gb2 = grads.at(head_param_name(head, "b2"));
  const Matrix& features = *trace.features;
  const std::size_t n = features.rows, d = features.cols, e = trace.raw.cols;
  if (grad_embedding.rows != n || grad_embedding.cols != e)
    throw DimensionMismatch("embedding gradient shape does not match the head output");

  Matrix grad_features(n, d);
  std::vector<double> dz(e), dh(d);
  for (std::size_t r = 0; r < n; ++r) {
    // Through the L2 normalization: dz = (g - u (u . g)) / |z|.
    const auto u = trace.embedding.row(r);
    const auto z = trace.raw.row(r);
    const auto g = grad_embedding.row(r);
    const double norm = std::sqrt(dot(z, z));
    const double ug = dot(u, g);
    for (std::size_t k = 0; k < e; ++k) dz[k] = norm > 0.0 ? (g[k] - u[k] * ug) / norm : 0.0;

    const auto h = trace.hidden.row(r);
    std::fill(dh.begin(), dh.end(), 0.0);
    for (std::size_t k = 0; k < e; ++k) {
      gb2.values[k] += dz[k];
      double* gw = gw2.values.data() + k * d;
      const double* w = w2.values.data() + k * d;
      for (std::size_t j = 0; j < d; ++j) {
        gw[j] += dz[k] * h[j];
        dh[j] += dz[k] * w[j];
      }
    }
    const auto f = features.row(r);
    auto gf = grad_features.row(r);
    for (std::size_t j = 0; j < d; ++j) {
      const double pre = dh[j] * (1.0 - h[j] * h[j]);
      gb1.values[j] += pre;
      double* gw = gw1.values.data() + j * d;
      const double* w = w1.values.data() + j * d;
      for (std::size_t i = 0; i < d; ++i) {
        gw[i] += pre * f[i];
        gf[i] += pre * w[i];
      }
    }
  }
  return grad_features;
}

void backbone_backward(const ModelParams& params, const BackboneTrace& trace,
                       const Matrix& grad_features, ParamSet& grads, int workers) {
  const auto& batch = *trace.batch;
  const Dims d = dims_of(params.config, batch);
  if (grad_features.rows != batch.count || grad_features.cols != static_cast<std::size_t>(d.d))
    throw DimensionMismatch("feature gradient shape does not match the batch");

  const auto& conv1_w = params.tensors.at("conv1.w");
  const auto& conv2_w = params.tensors.at("conv2.w");
  const auto& fc_w = params.tensors.at("fc.w");

  // Per-sample gradient buffers, reduced afterwards in sample order.
  const std::size_t n1w = conv1_w.size(), n1b = d.c1, n2w = conv2_w.size(), n2b = d.c2;
  const std::size_t nfw = fc_w.size(), nfb = d.d;
  const std::size_t per = n1w + n1b + n2w + n2b + nfw + nfb;
  std::vector<double> local(per * batch.count, 0.0);

  parallel_for(batch.count, workers, [&](std::size_t n) {
    double* g = local.data() + n * per;
    double* g1w = g;
    double* g1b = g1w + n1w;
    double* g2w = g1b + n1b;
    double* g2b = g2w + n2w;
    double* gfw = g2b + n2b;
    double* gfb = gfw + nfw;

    const double* pooled = trace.pooled.data() + n * d.c2;
    const auto gf = grad_features.row(n);
    std::vector<double> gpooled(d.c2, 0.0);
    for (int k = 0; k < d.d; ++k) {
      gfb[k] += gf[k];
      for (int c = 0; c < d.c2; ++c) {
        gfw[static_cast<std::size_t>(k) * d.c2 + c] += gf[k] * pooled[c];
        gpooled[c] += gf[k] * fc_w.values[static_cast<std::size_t>(k) * d.c2 + c];
      }
    }
    const std::size_t plane2 = static_cast<std::size_t>(d.h2) * d.w2;
    std::vector<double> ga2(d.act2);
    for (int c = 0; c < d.c2; ++c)
      std::fill_n(ga2.begin() + c * plane2, plane2, gpooled[c] / static_cast<double>(plane2));

    const double* a1 = trace.act1.data() + n * d.act1;
    const double* a2 = trace.act2.data() + n * d.act2;
    std::vector<double> ga1(d.act1, 0.0);
    conv_backward(a1, d.c1, d.h1, d.w1, conv2_w, a2, ga2.data(), g2w, g2b, ga1.data());
    conv_backward(batch.sample(n).data(), 3, d.h0, d.w0, conv1_w, a1, ga1.data(), g1w, g1b,
                  nullptr);
  });

  auto& t1w = grads.at("conv1.w");
  auto& t1b = grads.at("conv1.b");
  auto& t2w = grads.at("conv2.w");
  auto& t2b = grads.at("conv2.b");
  auto& tfw = grads.at("fc.w");
  auto& tfb = grads.at("fc.b");
  for (std::size_t n = 0; n < batch.count; ++n) {
    const double* g = local.data() + n * per;
    auto add = [&g](Tensor& t, std::size_t count) {
      for (std::size_t i = 0; i < count; ++i) t.values[i] += g[i];
      g += count;
    };
    add(t1w, n1w);
    add(t1b, n1b);
    add(t2w, n2w);
    add(t2b, n2b);
    add(tfw, nfw);
    add(tfb, nfb);
  }
}

Matrix embed_images(const ModelParams& params, std::size_t count,
                    const std::function<ImageBuffer(std::size_t)>& load, Level head, int workers) {
  if (!params.config.has_head(head))
    throw InvalidArgument("head " + std::string(to_string(head)) + " is not present in this " +
                          std::string(to_string(params.config.architecture)) + " model");
  PreprocessConfig pre;
  pre.width = params.config.input_width;
  pre.height = params.config.input_height;
  Rng unused(0);
  constexpr std::size_t kChunk = 64;
  Matrix out(count, static_cast<std::size_t>(params.config.head_dim(head)));
  for (std::size_t lo = 0; lo < count; lo += kChunk) {
    const std::size_t hi = std::min(count, lo + kChunk);
    std::vector<FeatureTensor> samples;
    samples.reserve(hi - lo);
    for (std::size_t i = lo; i < hi; ++i) samples.push_back(preprocess(load(i), pre, false, unused));
    const auto batch = Batch::from(samples, pre.width, pre.height);
    const auto emb = project(params, forward(params, batch, nullptr, workers), head);
    std::copy(emb.data.begin(), emb.data.end(), out.data.begin() + lo * out.cols);
  }
  return out;
}

Matrix embed_images(const ModelParams& params, const std::vector<ImageBuffer>& images, Level head,
                    int workers) {
  return embed_images(
      params, images.size(), [&](std::size_t i) { return images[i]; }, head, workers);
}

}  // namespace uiwf
