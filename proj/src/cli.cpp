#include "uiwf/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "uiwf/checkpoint.hpp"
#include "uiwf/dataset.hpp"
#include "uiwf/error.hpp"
#include "uiwf/evaluate.hpp"
#include "uiwf/motion.hpp"
#include "uiwf/rng.hpp"
#include "uiwf/synthgen.hpp"
#include "uiwf/trainer.hpp"
#include "uiwf/version.hpp"

namespace uiwf::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Globals {
  std::optional<std::uint64_t> seed;
  int verbosity = 0;
  std::string config;
  std::string out_dir;
  std::string registry;
  int workers = 1;
};

struct DedupArgs {
  std::string in, out_manifest, labels;
  double tc = 500.0, tb = 40.0;
  int kg = 5, kd = 5;
};

struct SynthArgs {
  std::string manifest, assets, out;
  double fraction = 0.6666;
};

struct TrainArgs {
  std::string manifest, out, levels, architecture;
  std::optional<int> epochs, batch_size, checkpoint_every;
  std::optional<double> learning_rate, temperature;
};

struct EvalArgs {
  std::string ckpt, manifest, out;
  std::string levels = "s,sv,svc";
  std::string head = "svc";
};

struct ExportArgs {
  std::string ckpt, manifest, out;
  std::string head = "svc";
  std::string split = "test";
};

struct StatsArgs {
  std::string manifest;
  std::string level = "svc";
};

class Runner {
 public:
  Runner(const Globals& g, std::vector<std::string> args, std::ostream& out, std::ostream& err)
      : g_(g), args_(std::move(args)), out_(out), err_(err) {}

  void dedup(const DedupArgs& a);
  void synth(const SynthArgs& a);
  void train(const TrainArgs& a);
  void eval(const EvalArgs& a);
  void export_embeddings(const ExportArgs& a);
  void stats(const StatsArgs& a);

 private:
  void log(int level, const std::string& message) const {
    if (g_.verbosity >= level) err_ << "[uiwf] " << message << '\n';
  }
  json config_file() const;
  std::uint64_t seed(const json& config) const;
  std::shared_ptr<const LabelRegistry> registry() const;
  fs::path output_dir(const std::string& preferred) const;
  void record(const fs::path& dir, const std::string& subcommand, std::uint64_t seed,
              const json& resolved) const;

  const Globals& g_;
  std::vector<std::string> args_;
  std::ostream& out_;
  std::ostream& err_;
};

Level parse_level(const std::string& text) {
  try {
    return level_from_string(text);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
}

std::vector<Level> parse_levels(const std::string& text) {
  try {
    return levels_from_string(text);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
}

std::string iso_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
}

json Runner::config_file() const {
  if (g_.config.empty()) return json::object();
  const fs::path path(g_.config);
  if (path.extension() == ".toml")
    throw UsageError("TOML configs are not supported; pass the same keys as JSON");
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config " + path.string());
  try {
    auto j = json::parse(in);
    if (!j.is_object()) throw ParseError("config must be a JSON object", 0);
    return j;
  } catch (const json::parse_error& e) {
    throw ParseError("config " + path.string() + ": " + e.what(), 0);
  }
}

std::uint64_t Runner::seed(const json& config) const {
  if (g_.seed) return *g_.seed;
  if (config.contains("seed")) return config.at("seed").get<std::uint64_t>();
  if (const char* env = std::getenv("UIWF_SEED"); env && *env) {
    try {
      std::size_t used = 0;
      const auto value = std::stoull(env, &used, 0);
      if (used != std::string(env).size()) throw std::invalid_argument("trailing characters");
      return value;
    } catch (const std::exception&) {
      throw UsageError(std::string("UIWF_SEED is not a 64-bit integer: ") + env);
    }
  }
  return 0;
}

std::shared_ptr<const LabelRegistry> Runner::registry() const {
  if (g_.registry.empty())
    return std::make_shared<const LabelRegistry>(LabelRegistry::default_registry());
  return std::make_shared<const LabelRegistry>(LabelRegistry::load(g_.registry));
}

fs::path Runner::output_dir(const std::string& preferred) const {
  if (!preferred.empty()) return preferred;
  if (!g_.out_dir.empty()) return g_.out_dir;
  return fs::current_path();
}

void Runner::record(const fs::path& dir, const std::string& subcommand, std::uint64_t seed,
                    const json& resolved) const {
  const auto text = resolved.dump(2) + "\n";
  write_text(dir / (subcommand + "_config.json"), text);
  const json provenance = {{"toolkit", "uiwf"},
                           {"version", kVersion},
                           {"subcommand", subcommand},
                           {"args", args_},
                           {"seed", seed},
                           {"config_digest", hex64(fnv1a64(resolved.dump()))},
                           {"timestamp", iso_timestamp()}};
  write_text(dir / (subcommand + "_provenance.json"), provenance.dump(2) + "\n");
}

// video_id -> (label, split) from "video_id<TAB>software<TAB>view[<TAB>split]".
std::map<std::string, std::pair<ChainLabel, Split>> read_video_labels(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read labels " + path.string());
  std::map<std::string, std::pair<ChainLabel, Split>> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line.front() == '#') continue;
    std::vector<std::string> cols;
    std::stringstream s(line);
    for (std::string c; std::getline(s, c, '\t');) cols.push_back(c);
    if (cols.size() < 3 || cols.size() > 4)
      throw ParseError("expected video_id, software, view and optional split", number);
    Split split = Split::Train;
    if (cols.size() == 4) {
      try {
        split = split_from_string(cols[3]);
      } catch (const Error& e) {
        throw ParseError(e.what(), number);
      }
    }
    out[cols[0]] = {ChainLabel{cols[1], cols[2], ContextValue::None}, split};
  }
  return out;
}

bool all_digits(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

void Runner::dedup(const DedupArgs& a) {
  const auto config = config_file();
  const auto run_seed = seed(config);
  MotionConfig motion;
  motion.contour_area_threshold = a.tc;
  motion.binarize_threshold = a.tb;
  motion.blur_width = motion.blur_height = a.kg;
  motion.dilate_width = motion.dilate_height = a.kd;
  try {
    motion.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }

  const fs::path in_dir(a.in);
  if (!fs::is_directory(in_dir)) throw UsageError("--in is not a directory: " + a.in);
  const fs::path labels_path = !a.labels.empty() ? fs::path(a.labels) : in_dir / "labels.tsv";
  const auto labels = read_video_labels(labels_path);
  const fs::path manifest_path(a.out_manifest);
  const fs::path root = manifest_path.has_parent_path() ? manifest_path.parent_path() : fs::path(".");

  std::vector<fs::path> videos;
  for (const auto& entry : fs::directory_iterator(in_dir))
    if (entry.is_directory()) videos.push_back(entry.path());
  std::sort(videos.begin(), videos.end());

  DatasetManifest manifest;
  manifest.root = root;
  manifest.registry = registry();
  std::size_t total_frames = 0;
  for (const auto& video : videos) {
    const auto video_id = video.filename().string();
    const auto label = labels.find(video_id);
    if (label == labels.end())
      throw ValidationError("no labels for video '" + video_id + "' in " + labels_path.string());

    std::vector<fs::path> frames;
    for (const auto& entry : fs::directory_iterator(video))
      if (entry.is_regular_file() && entry.path().extension() == ".png") frames.push_back(entry.path());
    const bool numeric = std::all_of(frames.begin(), frames.end(),
                                     [](const fs::path& p) { return all_digits(p.stem().string()); });
    if (numeric) {
      std::sort(frames.begin(), frames.end(), [](const fs::path& x, const fs::path& y) {
        return std::stoull(x.stem().string()) < std::stoull(y.stem().string());
      });
    } else {
      std::sort(frames.begin(), frames.end());
    }
    total_frames += frames.size();
    if (frames.size() < 2) {
      log(1, video_id + ": fewer than two frames, nothing kept");
      continue;
    }

    const auto transitions =
        motion_det(frames.size(), [&](std::size_t i) { return read_png(frames[i]); }, motion);
    const auto kept = kept_frames(transitions);
    log(1, video_id + ": kept " + std::to_string(kept.size()) + " of " +
               std::to_string(frames.size()) + " frames");
    for (const auto i : kept) {
      FrameRecord r;
      r.video_id = video_id;
      r.frame_index = numeric ? std::stoull(frames[i].stem().string()) : i;
      r.image_path = default_image_path(video_id, r.frame_index, false);
      r.label = label->second.first;
      r.context_observed = false;
      r.split = label->second.second;
      const auto dest = root / r.image_path;
      fs::create_directories(dest.parent_path());
      if (!fs::exists(dest) || !fs::equivalent(dest, frames[i]))
        fs::copy_file(frames[i], dest, fs::copy_options::overwrite_existing);
      manifest.records.push_back(std::move(r));
    }
  }
  validate(manifest);
  save_manifest(manifest, manifest_path);

  const json resolved = {{"in", a.in},           {"out_manifest", a.out_manifest},
                         {"labels", labels_path.string()},
                         {"contour_area_threshold", a.tc},
                         {"binarize_threshold", a.tb},
                         {"blur_kernel", a.kg}, {"dilate_kernel", a.kd}};
  record(output_dir(g_.out_dir.empty() ? root.string() : g_.out_dir), "dedup", run_seed, resolved);
  out_ << "kept " << manifest.records.size() << " of " << total_frames << " frames from "
       << videos.size() << " videos\n";
}

void Runner::synth(const SynthArgs& a) {
  const auto config = config_file();
  const auto run_seed = seed(config);
  if (!(a.fraction >= 0.0 && a.fraction <= 1.0)) throw UsageError("--fraction must be in [0, 1]");
  const auto reg = registry();
  const auto manifest = load_manifest(a.manifest, reg);
  validate(manifest);
  const auto db = AssetDB::load(a.assets, *reg);
  const fs::path out_dir(a.out);

  const auto result = augment_dataset(
      manifest, db, a.fraction, run_seed, disk_image_source(manifest),
      [&](const FrameRecord& r, const ImageBuffer& image) { write_png(image, out_dir / r.image_path); });
  for (const auto& r : manifest.records) {
    const auto dest = out_dir / r.image_path;
    fs::create_directories(dest.parent_path());
    const auto src = manifest.resolve(r);
    if (!fs::exists(dest) || !fs::equivalent(dest, src))
      fs::copy_file(src, dest, fs::copy_options::overwrite_existing);
  }
  auto augmented = result.manifest;
  augmented.root = out_dir;
  save_manifest(augmented, out_dir / "manifest.jsonl");

  json placements = json::array();
  for (const auto& p : result.placements)
    placements.push_back({{"generator", std::string(to_string(p.generator))},
                          {"source_id", p.source_id},
                          {"rect", {p.rect.x, p.rect.y, p.rect.width, p.rect.height}},
                          {"scale", p.scale},
                          {"crop_x", p.crop_x},
                          {"crop_width", p.crop_width},
                          {"flipped", p.flipped}});
  write_text(out_dir / "placements.json", placements.dump(2) + "\n");

  const json resolved = {{"manifest", a.manifest}, {"assets", a.assets}, {"out", a.out},
                         {"fraction", a.fraction}, {"seed", run_seed}};
  record(out_dir, "synth", run_seed, resolved);
  out_ << "synthesized " << result.placements.size() << " records into "
       << (out_dir / "manifest.jsonl").string() << '\n';
}

void Runner::train(const TrainArgs& a) {
  auto config = config_file();
  const auto run_seed = seed(config);
  config["seed"] = run_seed;
  if (a.epochs) config["epochs"] = *a.epochs;
  if (a.batch_size) config["batch_size"] = *a.batch_size;
  if (a.checkpoint_every) config["checkpoint_every"] = *a.checkpoint_every;
  if (a.learning_rate) config["learning_rate"] = *a.learning_rate;
  if (a.temperature) config["temperature"] = *a.temperature;
  if (!a.architecture.empty()) config["architecture"] = a.architecture;
  if (!a.levels.empty()) {
    json levels = json::array();
    for (const auto l : parse_levels(a.levels)) levels.push_back(std::string(to_string(l)));
    config["levels"] = levels;
    config.erase("lambdas");
    config.erase("heads");
  }
  TrainConfig resolved;
  try {
    resolved = train_config_from_json(config);
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }

  const auto manifest = load_manifest(a.manifest, registry());
  validate(manifest);
  const auto out_dir = output_dir(a.out);
  record(out_dir, "train", run_seed, to_json(resolved));

  TrainOptions options;
  options.out_dir = out_dir;
  options.workers = g_.workers;
  options.on_epoch = [&](int epoch, double loss) {
    std::ostringstream s;
    s << "epoch " << epoch << " shl loss " << std::setprecision(6) << loss;
    log(1, s.str());
  };
  const auto result = uiwf::train(manifest, resolved, options);
  double last = 0.0;
  for (const auto& row : result.log)
    if (row.level == "shl") last = row.loss;
  out_ << "trained " << resolved.epochs << " epochs, final shl loss " << std::setprecision(6)
       << last << ", checkpoint " << (out_dir / "checkpoint.bin").string() << '\n';
}

void Runner::eval(const EvalArgs& a) {
  const auto config = config_file();
  const auto run_seed = seed(config);
  EvalOptions options;
  options.levels = parse_levels(a.levels);
  options.head = parse_level(a.head);
  options.seed = run_seed;
  options.workers = g_.workers;
  const auto params = load_checkpoint(a.ckpt);
  if (!params.config.has_head(options.head))
    throw UsageError("checkpoint has no " + a.head + " head");
  const auto manifest = load_manifest(a.manifest, registry());
  validate(manifest);

  const auto report = evaluate(params, manifest, options);
  const fs::path out_path(a.out);
  write_text(out_path, to_json(report).dump(2) + "\n");

  json levels = json::array();
  for (const auto l : options.levels) levels.push_back(std::string(to_string(l)));
  const json resolved = {{"ckpt", a.ckpt}, {"manifest", a.manifest}, {"out", a.out},
                         {"levels", levels}, {"head", a.head},       {"seed", run_seed},
                         {"kmeans_n_init", options.kmeans.n_init},
                         {"kmeans_max_iter", options.kmeans.max_iter}};
  record(out_path.has_parent_path() ? out_path.parent_path() : fs::path("."), "eval", run_seed,
         resolved);

  out_ << "level\tclasses\tP@1\tR-Prec\tmAP@R\tAMI\n";
  out_ << std::fixed << std::setprecision(4);
  for (const auto& m : report.levels)
    out_ << to_string(m.level) << '\t' << m.num_classes << '\t'
         << m.retrieval.precision_at_1.macro << '\t' << m.retrieval.r_precision.macro << '\t'
         << m.retrieval.map_at_r.macro << '\t' << m.ami << '\n';
}

void Runner::export_embeddings(const ExportArgs& a) {
  const auto config = config_file();
  const auto run_seed = seed(config);
  const auto head = parse_level(a.head);
  const auto params = load_checkpoint(a.ckpt);
  if (!params.config.has_head(head)) throw UsageError("checkpoint has no " + a.head + " head");
  const auto manifest = load_manifest(a.manifest, registry());
  validate(manifest);

  std::vector<FrameRecord> records;
  if (a.split == "all") {
    records = manifest.records;
  } else if (a.split == "train" || a.split == "test") {
    records = manifest.split_records(split_from_string(a.split));
  } else {
    throw UsageError("--split must be train, test or all");
  }
  const auto source = disk_image_source(manifest);
  const auto embeddings = embed_images(
      params, records.size(), [&](std::size_t i) { return source(records[i]); }, head, g_.workers);
  const fs::path stem(a.out);
  uiwf::export_embeddings(embeddings, records, head, stem);

  const json resolved = {{"ckpt", a.ckpt}, {"manifest", a.manifest}, {"out", a.out},
                         {"head", a.head}, {"split", a.split}};
  record(stem.has_parent_path() ? stem.parent_path() : fs::path("."), "export-embeddings",
         run_seed, resolved);
  out_ << "exported " << embeddings.rows << " x " << embeddings.cols << " embeddings to "
       << stem.string() << ".bin\n";
}

void Runner::stats(const StatsArgs& a) {
  const auto config = config_file();
  const auto run_seed = seed(config);
  const auto manifest = load_manifest(a.manifest, registry());
  validate(manifest);
  const auto shares = a.level == "context" ? context_stats(manifest)
                                           : label_stats(manifest, parse_level(a.level));
  std::size_t total = 0;
  for (const auto& s : shares) total += s.count;
  out_ << "class\tcount\tpercent\n";
  out_ << std::fixed << std::setprecision(2);
  for (const auto& s : shares) out_ << s.key << '\t' << s.count << '\t' << s.percentage << '\n';
  out_ << "total\t" << total << '\t' << (total ? 100.0 : 0.0) << '\n';

  const json resolved = {{"manifest", a.manifest}, {"level", a.level}};
  record(output_dir(""), "stats", run_seed, resolved);
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"uiwf: UI screen-recording dataset, training and evaluation toolkit", "uiwf"};
  app.fallthrough();
  app.set_version_flag("--version", std::string(kVersion));

  Globals g;
  app.add_option("--seed", g.seed, "64-bit seed (falls back to the config file, then UIWF_SEED)");
  app.add_flag("-v,--verbose", g.verbosity, "Log progress to standard error (repeat for more)");
  app.add_option("--config", g.config, "JSON config file");
  app.add_option("--out-dir", g.out_dir, "Output directory for run records");
  app.add_option("--registry", g.registry, "software<TAB>view registry file (default: built-in)");
  app.add_option("--workers", g.workers, "Worker threads")->check(CLI::PositiveNumber);

  DedupArgs dedup;
  auto* dedup_cmd = app.add_subcommand("dedup", "Keep frames around visible changes in each video");
  dedup_cmd->add_option("--in", dedup.in, "Directory of <video_id>/<frame>.png")->required();
  dedup_cmd->add_option("--out-manifest", dedup.out_manifest, "JSONL manifest to write")->required();
  dedup_cmd->add_option("--tc", dedup.tc, "Contour area threshold (px^2)")->capture_default_str();
  dedup_cmd->add_option("--tb", dedup.tb, "Binarization threshold")->capture_default_str();
  dedup_cmd->add_option("--kg", dedup.kg, "Gaussian kernel size")->capture_default_str();
  dedup_cmd->add_option("--kd", dedup.kd, "Dilation kernel size")->capture_default_str();
  dedup_cmd->add_option("--labels", dedup.labels,
                        "video_id<TAB>software<TAB>view[<TAB>split] (default: <in>/labels.tsv)");

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Add synthetic context-menu and selection frames");
  synth_cmd->add_option("--manifest", synth.manifest)->required();
  synth_cmd->add_option("--assets", synth.assets, "menus/<software>/<id>.png, selections/<id>.png")
      ->required();
  synth_cmd->add_option("--fraction", synth.fraction)->capture_default_str();
  synth_cmd->add_option("--out", synth.out, "Output dataset directory")->required();

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train an embedding model");
  train_cmd->add_option("--manifest", train.manifest)->required();
  train_cmd->add_option("--out", train.out, "Checkpoint directory");
  train_cmd->add_option("--epochs", train.epochs);
  train_cmd->add_option("--batch-size", train.batch_size);
  train_cmd->add_option("--learning-rate", train.learning_rate);
  train_cmd->add_option("--temperature", train.temperature);
  train_cmd->add_option("--levels", train.levels, "Comma-separated loss levels, e.g. s,sv,svc");
  train_cmd->add_option("--architecture", train.architecture, "single-task or multi-task");
  train_cmd->add_option("--checkpoint-every", train.checkpoint_every);

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "Retrieval and clustering metrics on the test split");
  eval_cmd->add_option("--ckpt", eval.ckpt)->required();
  eval_cmd->add_option("--manifest", eval.manifest)->required();
  eval_cmd->add_option("--levels", eval.levels)->capture_default_str();
  eval_cmd->add_option("--head", eval.head)->capture_default_str();
  eval_cmd->add_option("--out", eval.out, "Report JSON path")->required();

  ExportArgs exp;
  auto* export_cmd = app.add_subcommand("export-embeddings", "Write embeddings as flat float64");
  export_cmd->add_option("--ckpt", exp.ckpt)->required();
  export_cmd->add_option("--manifest", exp.manifest)->required();
  export_cmd->add_option("--head", exp.head)->capture_default_str();
  export_cmd->add_option("--split", exp.split, "train, test or all")->capture_default_str();
  export_cmd->add_option("--out", exp.out, "Output stem; writes <stem>.bin and <stem>.json")
      ->required();

  StatsArgs stats;
  auto* stats_cmd = app.add_subcommand("stats", "Class distribution table of a manifest");
  stats_cmd->add_option("--manifest", stats.manifest)->required();
  stats_cmd->add_option("--level", stats.level, "s, sv, svc or context")->capture_default_str();

  app.require_subcommand(1);

  if (args.empty()) {
    err << app.help();
    return kUsageError;
  }
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    if (code == 0) return kSuccess;
    err << app.help();
    return kUsageError;
  }

  Runner runner(g, args, out, err);
  try {
    if (*dedup_cmd) runner.dedup(dedup);
    else if (*synth_cmd) runner.synth(synth);
    else if (*train_cmd) runner.train(train);
    else if (*eval_cmd) runner.eval(eval);
    else if (*export_cmd) runner.export_embeddings(exp);
    else if (*stats_cmd) runner.stats(stats);
  } catch (const UsageError& e) {
    err << "uiwf: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    err << "uiwf: " << e.what() << '\n';
    return kDataError;
  }
  return kSuccess;
}

}  // namespace uiwf::cli
