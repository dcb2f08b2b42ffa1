#include "uiwf/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "uiwf/error.hpp"
#include "uiwf/rng.hpp"

namespace uiwf {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

json to_json(const ModelConfig& c) {
  json heads = json::object();
  for (const auto& h : c.heads) heads[std::string(to_string(h.level))] = h.dim;
  return {{"input_width", c.input_width},
          {"input_height", c.input_height},
          {"conv1_channels", c.conv1_channels},
          {"conv2_channels", c.conv2_channels},
          {"backbone_dim", c.backbone_dim},
          {"architecture", std::string(to_string(c.architecture))},
          {"heads", heads}};
}

namespace {

std::vector<HeadSpec> heads_from_json(const json& j) {
  if (!j.is_object()) throw ParseError("'heads' must map level names to dimensions", 0);
  std::vector<HeadSpec> heads;
  for (const auto l : kAllLevels) {
    const auto key = std::string(to_string(l));
    if (j.contains(key)) heads.push_back({l, j.at(key).get<int>()});
  }
  for (const auto& [key, value] : j.items()) level_from_string(key);
  return heads;
}

}  // namespace

ModelConfig model_config_from_json(const json& j) {
  try {
    ModelConfig c;
    c.input_width = j.at("input_width").get<int>();
    c.input_height = j.at("input_height").get<int>();
    c.conv1_channels = j.at("conv1_channels").get<int>();
    c.conv2_channels = j.at("conv2_channels").get<int>();
    c.backbone_dim = j.at("backbone_dim").get<int>();
    c.architecture = architecture_from_string(j.at("architecture").get<std::string>());
    c.heads = heads_from_json(j.at("heads"));
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ParseError(std::string("model config: ") + e.what(), 0);
  }
}

std::uint64_t config_digest(const ModelConfig& config) { return fnv1a64(to_json(config).dump()); }

namespace {

template <typename T>
void put(std::string& out, T value) {
  char buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.append(buf, sizeof(T));
}

class Reader {
public:
  explicit Reader(const std::string& bytes) : bytes_(bytes) {}

  template <typename T>
  T get() {
    need(sizeof(T));
    T value;
    std::memcpy(&value, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return value;
  }
  std::string take(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  bool done() const noexcept { return pos_ == bytes_.size(); }

private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw ParseError("checkpoint truncated", 0);
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string checkpoint_bytes(const ModelParams& params) {
  const std::string config = to_json(params.config).dump();
  std::string out(kCheckpointMagic, sizeof kCheckpointMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, fnv1a64(config));
  put<std::uint64_t>(out, config.size());
  out += config;
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.tensors.size()));
  for (const auto& [name, t] : params.tensors) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put<std::uint32_t>(out, static_cast<std::uint32_t>(t.shape.size()));
    for (const auto d : t.shape) put<std::uint64_t>(out, d);
    for (const auto v : t.values) put<double>(out, v);
  }
  return out;
}

ModelParams parse_checkpoint(const std::string& bytes) {
  Reader r(bytes);
  if (r.take(sizeof kCheckpointMagic) != std::string(kCheckpointMagic, sizeof kCheckpointMagic))
    throw ParseError("not a uiwf checkpoint (bad magic)", 0);
  const auto version = r.get<std::uint32_t>();
  if (version != kCheckpointVersion)
    throw ParseError("unsupported checkpoint version " + std::to_string(version), 0);
  const auto digest = r.get<std::uint64_t>();
  const auto config_text = r.take(r.get<std::uint64_t>());
  if (fnv1a64(config_text) != digest) throw ParseError("checkpoint config digest mismatch", 0);

  ModelParams params;
  try {
    params.config = model_config_from_json(json::parse(config_text));
  } catch (const json::exception& e) {
    throw ParseError(std::string("checkpoint config: ") + e.what(), 0);
  }
  const auto expected = init_params(params.config, 0).tensors;

  const auto count = r.get<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    auto name = r.take(r.get<std::uint32_t>());
    std::vector<std::size_t> shape(r.get<std::uint32_t>());
    std::size_t n = 1;
    for (auto& d : shape) {
      d = static_cast<std::size_t>(r.get<std::uint64_t>());
      n *= d;
    }
    auto& t = params.tensors.add(std::move(name), std::move(shape));
    for (std::size_t k = 0; k < n; ++k) t.values[k] = r.get<double>();
  }
  if (!r.done()) throw ParseError("trailing bytes after checkpoint tensors", 0);
  if (!params.tensors.same_layout(expected))
    throw ParseError("checkpoint tensors do not match its model config", 0);
  return params;
}

void save_checkpoint(const ModelParams& params, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  const auto bytes = checkpoint_bytes(params);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

ModelParams load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return parse_checkpoint(buf.str());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), 0);
  }
}

json to_json(const TrainConfig& c) {
  json lambdas = json::object();
  json levels = json::array();
  for (const auto l : c.shl.levels) {
    levels.push_back(std::string(to_string(l)));
    lambdas[std::string(to_string(l))] = c.shl.weight(l);
  }
  auto model = to_json(c.model);
  json j = {{"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"learning_rate", c.adam.learning_rate},
            {"beta1", c.adam.beta1},
            {"beta2", c.adam.beta2},
            {"epsilon", c.adam.epsilon},
            {"temperature", c.shl.temperature},
            {"seed", c.seed},
            {"levels", levels},
            {"lambdas", lambdas},
            {"brightness", c.preprocess.brightness},
            {"hflip_prob", c.preprocess.hflip_prob},
            {"checkpoint_every", c.checkpoint_every}};
  j.update(model);
  return j;
}

TrainConfig train_config_from_json(const json& j, TrainConfig c) {
  if (!j.is_object()) throw ParseError("train config must be a JSON object", 0);
  static const std::set<std::string> known{
      "epochs",         "batch_size",     "learning_rate", "beta1",        "beta2",
      "epsilon",        "temperature",    "seed",          "levels",       "lambdas",
      "brightness",     "hflip_prob",     "checkpoint_every", "input_width", "input_height",
      "conv1_channels", "conv2_channels", "backbone_dim",  "architecture", "heads"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw ParseError("unknown train config key '" + key + "'", 0);

  try {
    auto opt = [&](const char* key, auto& field) {
      if (j.contains(key)) field = j.at(key).get<std::decay_t<decltype(field)>>();
    };
    opt("epochs", c.epochs);
    opt("batch_size", c.batch_size);
    opt("learning_rate", c.adam.learning_rate);
    opt("beta1", c.adam.beta1);
    opt("beta2", c.adam.beta2);
    opt("epsilon", c.adam.epsilon);
    opt("temperature", c.shl.temperature);
    opt("seed", c.seed);
    opt("brightness", c.preprocess.brightness);
    opt("hflip_prob", c.preprocess.hflip_prob);
    opt("checkpoint_every", c.checkpoint_every);
    opt("input_width", c.model.input_width);
    opt("input_height", c.model.input_height);
    opt("conv1_channels", c.model.conv1_channels);
    opt("conv2_channels", c.model.conv2_channels);
    opt("backbone_dim", c.model.backbone_dim);
    if (j.contains("architecture"))
      c.model.architecture = architecture_from_string(j.at("architecture").get<std::string>());
    if (j.contains("heads")) c.model.heads = heads_from_json(j.at("heads"));
    if (j.contains("levels")) {
      c.shl.levels.clear();
      for (const auto& l : j.at("levels")) c.shl.levels.push_back(level_from_string(l.get<std::string>()));
    }
    if (j.contains("lambdas")) {
      c.shl.weights = {0.0, 0.0, 0.0};
      for (const auto& [key, value] : j.at("lambdas").items())
        c.shl.set_weight(level_from_string(key), value.get<double>());
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("train config: ") + e.what(), 0);
  }
  // Fill in what follows from the chosen levels when it was left out.
  if (j.contains("levels") && !j.contains("lambdas")) {
    c.shl.weights = {0.0, 0.0, 0.0};
    const auto preset = c.shl.levels.size() == 3   ? SHLConfig::three_level()
                        : c.shl.levels.size() == 2 ? SHLConfig::two_level()
                                                   : SHLConfig::single_level();
    for (const auto l : c.shl.levels)
      c.shl.set_weight(l, preset.uses(l) ? preset.weight(l)
                                         : 1.0 / static_cast<double>(c.shl.levels.size()));
  }
  if (!j.contains("heads")) {
    const auto old_heads = c.model.heads;
    auto dim_of = [&](Level l) {
      for (const auto& h : old_heads)
        if (h.level == l) return h.dim;
      return old_heads.empty() ? 128 : old_heads.back().dim;
    };
    c.model.heads.clear();
    if (c.model.architecture == Architecture::SingleTask) {
      c.model.heads.push_back({Level::SVC, dim_of(Level::SVC)});
    } else {
      for (const auto l : kAllLevels)
        if (c.shl.uses(l)) c.model.heads.push_back({l, dim_of(l)});
    }
  }
  c.preprocess.width = c.model.input_width;
  c.preprocess.height = c.model.input_height;
  c.validate();
  return c;
}

}  // namespace uiwf
