// Acceptance criteria A1-A7. Prints one PASS/FAIL line per criterion with its
// runtime; exits non-zero if any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"
#include "toy_fixture.hpp"
#include "uiwf/checkpoint.hpp"
#include "uiwf/evaluate.hpp"
#include "uiwf/losses.hpp"
#include "uiwf/metrics.hpp"
#include "uiwf/motion.hpp"
#include "uiwf/synthgen.hpp"
#include "uiwf/trainer.hpp"

using namespace uiwf;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = true;
  std::vector<std::string> notes;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      notes.push_back("FAILED " + what);
    }
  }
  void note(const std::string& text) { notes.push_back(text); }
};

std::string fmt(double v, int precision = 6) {
  std::ostringstream s;
  s.precision(precision);
  s << v;
  return s.str();
}

// ---------------------------------------------------------------------------
// Shared helpers

Matrix random_unit_rows(std::size_t n, std::size_t d, Rng& rng) {
  Matrix m(n, d);
  for (auto& v : m.data) v = uniform_real(rng, -1.0, 1.0);
  normalize_rows(m);
  return m;
}

std::vector<int> random_classes(std::size_t n, int k, Rng& rng) {
  std::vector<int> y(n);
  for (auto& v : y) v = static_cast<int>(uniform_index(rng, static_cast<std::size_t>(k)));
  return y;
}

std::vector<std::vector<double>> rows(const Matrix& m) {
  std::vector<std::vector<double>> out;
  for (std::size_t i = 0; i < m.rows; ++i) out.emplace_back(m.row(i).begin(), m.row(i).end());
  return out;
}

// ---------------------------------------------------------------------------
// A1

Outcome a1() {
  Outcome out;
  Matrix two(2, 3);
  two(0, 0) = 1.0;
  two(1, 1) = 1.0;
  const double zero = supcon_loss({&two, {0, 0}, 0.1}).loss;
  out.require(std::abs(zero) <= 1e-12, "N=2 same-class loss " + fmt(zero) + " != 0");

  Matrix same(4, 2);
  for (std::size_t i = 0; i < 4; ++i) same(i, 0) = 1.0;
  for (const double tau : {0.05, 0.1, 0.5, 1.0}) {
    const double l = supcon_loss({&same, {0, 0, 0, 0}, tau}).loss;
    out.require(std::abs(l - 4.0 * std::log(3.0)) <= 1e-9,
                "N=4 identical loss " + fmt(l, 17) + " at tau " + fmt(tau));
  }

  Rng rng(2024);
  double worst = 0.0;
  for (int t = 0; t < 20; ++t) {
    const auto n = 2 + uniform_index(rng, 7);
    const auto d = 1 + uniform_index(rng, 4);
    auto f = random_unit_rows(n, d, rng);
    const auto y = random_classes(n, 1 + static_cast<int>(uniform_index(rng, 3)), rng);
    const double tau = uniform_real(rng, 0.1, 1.0);
    const auto g = supcon_loss({&f, y, tau}).grad;
    const double h = 1e-6;
    double diff2 = 0.0, num2 = 0.0, ana2 = 0.0;
    for (std::size_t i = 0; i < f.data.size(); ++i) {
      const double keep = f.data[i];
      f.data[i] = keep + h;
      const double up = supcon_loss({&f, y, tau}).loss;
      f.data[i] = keep - h;
      const double down = supcon_loss({&f, y, tau}).loss;
      f.data[i] = keep;
      const double numeric = (up - down) / (2 * h);
      diff2 += (numeric - g.data[i]) * (numeric - g.data[i]);
      num2 += numeric * numeric;
      ana2 += g.data[i] * g.data[i];
    }
    const double scale = std::max({std::sqrt(num2), std::sqrt(ana2), 1e-8});
    worst = std::max(worst, std::sqrt(diff2) / scale);
  }
  out.require(worst <= 1e-6, "gradient relative error " + fmt(worst));
  out.note("max gradient rel. error " + fmt(worst, 3) + " over 20 batches");
  return out;
}

// ---------------------------------------------------------------------------
// A2

toy::Spec small_spec() {
  toy::Spec s;
  s.width = 32;
  s.height = 24;
  s.train_per_class = 6;
  s.test_per_class = 2;
  s.train_videos = 3;
  s.test_videos = 2;
  return s;
}

Outcome a2() {
  Outcome out;
  Rng rng(77);
  double worst = 0.0;
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = 2 + uniform_index(rng, 10);
    std::vector<Matrix> f;
    std::vector<std::vector<int>> y;
    for (int l = 0; l < 3; ++l) {
      f.push_back(random_unit_rows(n, 1 + uniform_index(rng, 5), rng));
      y.push_back(random_classes(n, 1 + static_cast<int>(uniform_index(rng, 4)), rng));
    }
    SHLConfig config;
    config.temperature = uniform_real(rng, 0.05, 1.0);
    std::vector<LevelBatch> batches;
    for (int l = 0; l < 3; ++l) {
      config.set_weight(kAllLevels[l], uniform_real(rng, 0.0, 1.0));
      batches.push_back({kAllLevels[l], {&f[l], y[l], config.temperature}});
    }
    const double got = shl_loss(batches, config).loss;
    double expect = 0.0;
    for (int l = 0; l < 3; ++l)
      expect += config.weight(kAllLevels[l]) * oracle::supcon(rows(f[l]), y[l], config.temperature);
    worst = std::max(worst, std::abs(got - expect) / std::max(1.0, std::abs(expect)));
  }
  out.require(worst <= 1e-12, "SHL vs weighted oracle sum, worst " + fmt(worst));

  const auto fx = toy::build(small_spec());
  TrainConfig multi;
  multi.batch_size = 12;
  multi.model.input_width = multi.preprocess.width = 16;
  multi.model.input_height = multi.preprocess.height = 12;
  multi.model.conv1_channels = 4;
  multi.model.conv2_channels = 6;
  multi.model.backbone_dim = 16;
  multi.model.heads = {{Level::S, 8}, {Level::SV, 8}, {Level::SVC, 8}};
  multi.shl.set_weight(Level::S, 0.0);
  multi.shl.set_weight(Level::SV, 0.0);
  multi.shl.set_weight(Level::SVC, 1.0);
  auto single = multi;
  single.model.architecture = Architecture::SingleTask;
  single.model.heads = {{Level::SVC, 8}};
  single.shl = SHLConfig::single_level();

  auto pm = init_params(multi.model, 5);
  auto ps = init_params(single.model, 5);
  auto sm = AdamState::for_params(pm.tensors);
  auto ss = AdamState::for_params(ps.tensors);
  const auto source = fx.source();
  const auto records = fx.manifest.split_records(Split::Train);
  Rng pick(6);
  int identical_steps = 0;
  for (int step = 0; step < 10; ++step) {
    std::vector<FeatureTensor> samples;
    std::vector<ChainLabel> labels;
    for (int i = 0; i < multi.batch_size; ++i) {
      const auto& r = records[uniform_index(pick, records.size())];
      Rng aug(pick());
      samples.push_back(preprocess(source(r), multi.preprocess, true, aug));
      labels.push_back(r.label);
    }
    const auto batch = Batch::from(samples, 16, 12);
    train_step(pm, sm, batch, labels, multi);
    train_step(ps, ss, batch, labels, single);
    bool same = true;
    for (const auto& [name, tensor] : ps.tensors) same = same && pm.tensors.at(name) == tensor;
    identical_steps += same ? 1 : 0;
  }
  out.require(identical_steps == 10,
              "parity held on " + std::to_string(identical_steps) + " of 10 steps");
  out.note("SHL worst rel. deviation " + fmt(worst, 3) + "; parity bit-exact for " +
           std::to_string(identical_steps) + "/10 steps");
  return out;
}

// ---------------------------------------------------------------------------
// A3

Matrix lattice_unit_rows(std::size_t n, std::size_t d, Rng& rng) {
  Matrix m(n, d);
  for (auto& v : m.data) v = static_cast<double>(uniform_index(rng, 5)) - 2.0;
  for (std::size_t i = 0; i < n; ++i)
    if (std::all_of(m.row(i).begin(), m.row(i).end(), [](double v) { return v == 0.0; })) m(i, 0) = 1.0;
  normalize_rows(m);
  return m;
}

std::vector<std::string> random_keys(std::size_t n, int k, Rng& rng) {
  std::vector<std::string> keys(n);
  for (auto& key : keys) key = std::string(1, static_cast<char>('a' + uniform_index(rng, static_cast<std::size_t>(k))));
  return keys;
}

Outcome a3() {
  Outcome out;
  Rng rng(31);
  int mismatches = 0;
  for (int t = 0; t < 300; ++t) {
    const auto n_db = 1 + uniform_index(rng, 24);
    const auto n_q = 1 + uniform_index(rng, 32 - n_db);
    RetrievalIndex idx;
    idx.database = lattice_unit_rows(n_db, 2 + uniform_index(rng, 2), rng);
    idx.queries = lattice_unit_rows(n_q, idx.database.cols, rng);
    const int k = 1 + static_cast<int>(uniform_index(rng, 4));
    idx.database_keys = random_keys(n_db, k, rng);
    idx.query_keys = random_keys(n_q, k, rng);
    const auto s = retrieval_scores(idx);
    const auto ref = oracle::retrieval(rows(idx.database), idx.database_keys, rows(idx.queries),
                                       idx.query_keys);
    if (s.precision_at_1.macro != ref.p_at_1 || s.r_precision.macro != ref.r_precision ||
        s.map_at_r.macro != ref.map_at_r)
      ++mismatches;
  }
  out.require(mismatches == 0, std::to_string(mismatches) + " of 300 fixtures differ from the oracle");

  // 2/3 and 5/9 have no exact binary form; "exact" means within 2 ulp.
  const auto exact = [](double got, double want) {
    return std::abs(got - want) <= 2.0 * std::numeric_limits<double>::epsilon() * want;
  };
  out.require(exact(r_precision_of({true, true, false}, 3), 2.0 / 3.0), "R-Precision 2/3");
  out.require(exact(average_precision_at_r({true, true, false}, 3), 2.0 / 3.0), "mAP@R 2/3");
  out.require(exact(average_precision_at_r({true, false, true}, 3), 5.0 / 9.0), "mAP@R 5/9");

  const auto u = Partition::from_labels({0, 0, 1, 1, 2, 2, 2});
  out.require(ami(u, u) == 1.0, "AMI identical = " + fmt(ami(u, u), 17));
  const double permuted = ami(u, Partition::from_labels({2, 2, 0, 0, 1, 1, 1}));
  out.require(permuted == 1.0, "AMI permuted = " + fmt(permuted, 17));

  const std::vector<int> six_u{0, 0, 1, 1, 2, 2}, six_v{0, 0, 1, 1, 1, 2};
  const double six = ami(Partition::from_labels(six_u), Partition::from_labels(six_v));
  const double six_ref = oracle::ami(six_u, six_v);
  out.require(std::abs(six - six_ref) <= 1e-9, "six-item AMI " + fmt(six, 17) + " vs " + fmt(six_ref, 17));

  Rng prng(8);
  std::vector<int> truth(200);
  for (std::size_t i = 0; i < truth.size(); ++i) truth[i] = static_cast<int>(i % 4);
  double sum = 0.0;
  for (int t = 0; t < 200; ++t) {
    std::vector<int> random(200);
    for (auto& v : random) v = static_cast<int>(uniform_index(prng, 4));
    sum += ami(Partition::from_labels(truth), Partition::from_labels(random));
  }
  const double mean = sum / 200.0;
  out.require(mean >= -0.05 && mean <= 0.05, "mean AMI of random partitions " + fmt(mean));
  out.note("six-item AMI " + fmt(six, 12) + ", random-partition mean AMI " + fmt(mean, 3));
  return out;
}

// ---------------------------------------------------------------------------
// A4

std::vector<Transition> oracle_motion(const std::vector<ImageBuffer>& frames, const MotionConfig& c) {
  std::vector<Transition> out;
  std::size_t b = 0;
  for (std::size_t a = 1; a < frames.size(); ++a) {
    const auto areas = oracle::region_areas(frames[b].data, frames[a].data, frames[a].width,
                                            frames[a].height, c.blur_width, c.dilate_width,
                                            c.binarize_threshold);
    long long max_area = 0;
    for (const auto v : areas) max_area = std::max(max_area, v);
    if (static_cast<double>(max_area) > c.contour_area_threshold) {
      out.push_back({b, a, max_area});
      b = a;
    }
  }
  return out;
}

// Rectangles revealed one at a time in separate grid cells.
std::vector<ImageBuffer> event_video(Rng& rng) {
  std::vector<ImageBuffer> frames;
  ImageBuffer current(96, 96, 0);
  std::vector<int> cells{0, 1, 2, 3, 4, 5, 6, 7, 8};
  shuffle(std::span<int>(cells), rng);
  std::size_t used = 0;
  frames.push_back(current);
  for (int i = 0; i < 12; ++i) {
    if (used < cells.size() && bernoulli(rng, 0.7)) {
      const int cell = cells[used++];
      const int s = 2 + static_cast<int>(uniform_index(rng, 19));
      const int cx = (cell % 3) * 32 + 16, cy = (cell / 3) * 32 + 16;
      current.fill_rect(cx - s / 2, cy - s / 2, s, s, 255, 255, 255);
    }
    frames.push_back(current);
  }
  return frames;
}

Outcome a4() {
  Outcome out;
  std::vector<ImageBuffer> still(50, ImageBuffer(64, 48, 120));
  out.require(motion_det(still, MotionConfig{}).empty(), "constant video saved a transition");

  std::vector<ImageBuffer> frames(10, ImageBuffer(128, 128, 0));
  for (std::size_t i = 5; i < frames.size(); ++i) frames[i].fill_rect(32, 32, 64, 64, 255, 255, 255);
  MotionConfig config;
  config.contour_area_threshold = 2000;
  const auto t = motion_det(frames, config);
  const auto ref = oracle_motion(frames, config);
  out.require(t == ref, "white square differs from the pixel-level oracle");
  out.require(t.size() == 1, std::to_string(t.size()) + " transitions saved");
  if (t.size() == 1) {
    out.require(t[0].next == 5, "save lands on frame " + std::to_string(t[0].next));
    out.require(t[0].max_area == 4900, "area " + std::to_string(t[0].max_area));
    out.note("white square saves (" + std::to_string(t[0].prev) + "," + std::to_string(t[0].next) +
             ") area " + std::to_string(t[0].max_area) +
             " = oracle; frame 0 is the reference (identical to frame 4), and blur widens the "
             "region to 70x70 (stated literal: (4,5), 68x68 = 4624)");
  }

  Rng rng(404);
  int violations = 0;
  const std::vector<double> sweep{3000, 2000, 1000, 700, 500, 400, 300, 200, 100, 10};
  for (int trial = 0; trial < 40; ++trial) {
    const auto video = event_video(rng);
    std::vector<std::size_t> previous;
    std::size_t previous_count = 0;
    for (const double tc : sweep) {
      MotionConfig c;
      c.contour_area_threshold = tc;
      std::vector<std::size_t> changes;
      for (const auto& x : motion_det(video, c)) changes.push_back(x.next);
      if (!std::includes(changes.begin(), changes.end(), previous.begin(), previous.end()) ||
          changes.size() < previous_count)
        ++violations;
      previous = changes;
      previous_count = changes.size();
    }
  }
  out.require(violations == 0, std::to_string(violations) + " monotonicity violations");
  out.note("T_C sweep of 10 thresholds on 40 event videos: " + std::to_string(violations) +
           " violations");
  return out;
}

// ---------------------------------------------------------------------------
// A5 / A7

struct ToyRun {
  std::string checkpoint;
  std::string report;
  MetricsReport metrics;
  double seconds = 0.0;
};

TrainConfig toy_config() {
  TrainConfig c;
  c.epochs = 50;
  c.batch_size = 64;
  c.adam.learning_rate = 1e-4;
  c.shl = SHLConfig::three_level();
  c.shl.temperature = 0.1;
  c.seed = 2024;
  c.model.architecture = Architecture::MultiTask;
  c.model.input_width = c.preprocess.width = 48;
  c.model.input_height = c.preprocess.height = 32;
  c.preprocess.brightness = 0.0;
  return c;
}

toy::Spec toy_spec() {
  toy::Spec spec;
  spec.color_jitter = 0;
  spec.selection_height = 16;
  return spec;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

ToyRun toy_run(const fs::path& dir) {
  const auto start = std::chrono::steady_clock::now();
  const auto fx = toy::build(toy_spec());
  const auto config = toy_config();
  TrainOptions options;
  options.out_dir = dir;
  options.source = fx.source();
  const auto result = train(fx.manifest, config, options);
  EvalOptions eval;
  eval.levels = {Level::S, Level::SV, Level::SVC};
  eval.head = Level::SVC;
  eval.seed = config.seed;
  eval.source = fx.source();
  ToyRun run;
  run.metrics = evaluate(result.params, fx.manifest, eval);
  {
    std::ofstream(dir / "report.json") << to_json(run.metrics).dump(2) << '\n';
  }
  run.checkpoint = slurp(dir / "checkpoint.bin");
  run.report = slurp(dir / "report.json");
  run.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

std::optional<ToyRun> first_run;
std::unique_ptr<testing_support::TempDir> scratch;

Outcome a5() {
  Outcome out;
  first_run = toy_run(scratch->path() / "run1");
  const auto& m = first_run->metrics;
  const auto& svc = m.at(Level::SVC).retrieval;
  out.require(svc.precision_at_1.macro >= 0.90, "svc P@1 " + fmt(svc.precision_at_1.macro, 4) + " < 0.90");
  out.require(svc.r_precision.macro >= 0.80, "svc R-Precision " + fmt(svc.r_precision.macro, 4) + " < 0.80");
  out.require(m.hierarchy_violations == 0,
              std::to_string(m.hierarchy_violations) + " hierarchy violations");
  std::ostringstream s;
  s << "svc P@1 " << fmt(svc.precision_at_1.macro, 4) << ", R-Prec " << fmt(svc.r_precision.macro, 4)
    << ", mAP@R " << fmt(svc.map_at_r.macro, 4) << ", AMI " << fmt(m.at(Level::SVC).ami, 4)
    << "; sv P@1 " << fmt(m.at(Level::SV).retrieval.precision_at_1.macro, 4) << "; s P@1 "
    << fmt(m.at(Level::S).retrieval.precision_at_1.macro, 4) << "; hierarchy violations "
    << m.hierarchy_violations;
  out.note(s.str());
  return out;
}

Outcome a7() {
  Outcome out;
  if (!first_run) first_run = toy_run(scratch->path() / "run1");
  const auto second = toy_run(scratch->path() / "run2");
  out.require(!first_run->checkpoint.empty(), "no checkpoint written");
  out.require(first_run->checkpoint == second.checkpoint, "checkpoint bytes differ");
  out.require(first_run->report == second.report, "report bytes differ");
  out.note("checkpoint " + std::to_string(second.checkpoint.size()) + " bytes and report " +
           std::to_string(second.report.size()) + " bytes identical across runs");
  return out;
}

// ---------------------------------------------------------------------------
// A6

Outcome a6() {
  Outcome out;
  const auto reg = toy::registry(3);
  const auto db = toy::assets(3);
  const auto labels = reg->chain_labels();
  DatasetManifest m;
  m.registry = reg;
  std::map<std::string, ImageBuffer> images;
  Rng rng(66);
  for (std::size_t i = 0; i < 1000; ++i) {
    FrameRecord r;
    r.video_id = "v" + std::to_string(i % 37);
    r.frame_index = i;
    r.image_path = default_image_path(r.video_id, i, false);
    r.label = labels[uniform_index(rng, labels.size())];
    r.label.context = ContextValue::None;
    r.context_observed = false;
    r.split = Split::Train;
    ImageBuffer img(24 + static_cast<int>(uniform_index(rng, 100)), 12 + static_cast<int>(uniform_index(rng, 60)));
    for (auto& b : img.data) b = static_cast<std::uint8_t>(uniform_index(rng, 256));
    images[r.image_path] = std::move(img);
    m.records.push_back(std::move(r));
  }
  const auto source = [&](const FrameRecord& r) { return images.at(r.image_path); };
  std::size_t in_bounds = 0, relabelled = 0, pool_ok = 0, menus = 0, sizes_ok = 0;
  const auto result = augment_dataset(m, db, 1.0, 99, source,
                                      [&](const FrameRecord& r, const ImageBuffer& img) {
                                        const auto& base = images.at(default_image_path(r.video_id, r.frame_index, false));
                                        sizes_ok += img.width == base.width && img.height == base.height;
                                      });
  const std::size_t n = result.placements.size();
  out.require(n == 1000, std::to_string(n) + " generations instead of 1000");
  for (std::size_t i = 0; i < n; ++i) {
    const auto& rec = result.manifest.records[m.records.size() + i];
    const auto& place = result.placements[i];
    const auto& base = images.at(default_image_path(rec.video_id, rec.frame_index, false));
    in_bounds += place.rect.inside(base.width, base.height);
    relabelled += rec.synthetic && rec.context_observed && rec.label.context == place.generator &&
                  place.generator != ContextValue::None;
    if (place.generator == ContextValue::Menu) {
      ++menus;
      pool_ok += place.source_id.rfind(rec.label.software + "/", 0) == 0;
    } else {
      ++pool_ok;
    }
  }
  out.require(in_bounds == n, std::to_string(n - in_bounds) + " placements out of bounds");
  out.require(sizes_ok == n, std::to_string(n - sizes_ok) + " images changed size");
  out.require(relabelled == n, std::to_string(n - relabelled) + " labels not rewritten");
  out.require(pool_ok == n, std::to_string(n - pool_ok) + " menus from a foreign software pool");
  const double sigma = std::sqrt(static_cast<double>(n) * 0.25);
  const double dev = std::abs(static_cast<double>(menus) - static_cast<double>(n) / 2.0);
  out.require(dev <= 3.0 * sigma, "menu share " + std::to_string(menus) + "/" + std::to_string(n));

  std::size_t wrong_sizes = 0;
  for (const std::size_t count : {1u, 2u, 3u, 7u, 100u, 999u, 1000u}) {
    DatasetManifest sub;
    sub.registry = reg;
    sub.records.assign(m.records.begin(), m.records.begin() + static_cast<std::ptrdiff_t>(count));
    const auto expect = static_cast<std::size_t>(std::floor(0.6666 * static_cast<double>(count)));
    wrong_sizes += plan_augmentation(sub, 0.6666, 5).size() != expect;
  }
  out.require(wrong_sizes == 0, std::to_string(wrong_sizes) + " plan sizes differ from floor(0.6666 N)");
  out.note("1000 generations: " + std::to_string(menus) + " menus, |dev| " + fmt(dev / sigma, 3) +
           " sigma; all placements in bounds");
  return out;
}

struct Criterion {
  std::string id;
  std::string title;
  double limit_seconds;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria A1-A7"};
  std::vector<std::string> only;
  app.add_option("--only", only, "Run only these criteria, e.g. --only A1 A3");
  CLI11_PARSE(app, argc, argv);

  scratch = std::make_unique<testing_support::TempDir>("acceptance");
  const std::vector<Criterion> criteria{
      {"A1", "loss correctness", 5, a1},
      {"A2", "SHL linearity and parity", 30, a2},
      {"A3", "metric oracles", 60, a3},
      {"A4", "motion detection", 30, a4},
      {"A5", "end-to-end toy run", 300, a5},
      {"A6", "synthgen contracts", 60, a6},
      {"A7", "determinism", 600, a7},
  };
  bool all = true;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = c.run();
    } catch (const std::exception& e) {
      outcome.require(false, std::string("exception: ") + e.what());
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (seconds > c.limit_seconds) outcome.require(false, "runtime over " + fmt(c.limit_seconds) + " s");
    all = all && outcome.pass;
    std::printf("%s %s  %-26s %8.2f s (limit %g s)\n", c.id.c_str(), outcome.pass ? "PASS" : "FAIL",
                c.title.c_str(), seconds, c.limit_seconds);
    for (const auto& n : outcome.notes) std::printf("     %s\n", n.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
