#include <fstream>

#include "doctest.h"
#include "temp_dir.hpp"
#include "toy_fixture.hpp"
#include "uiwf/error.hpp"
#include "uiwf/evaluate.hpp"

using namespace uiwf;

namespace {

toy::Spec spec() {
  toy::Spec s;
  s.width = 32;
  s.height = 24;
  s.train_per_class = 2;
  s.test_per_class = 8;
  s.train_videos = 2;
  s.test_videos = 4;
  return s;
}

ModelConfig tiny_model() {
  ModelConfig c;
  c.input_width = 16;
  c.input_height = 12;
  c.conv1_channels = 4;
  c.conv2_channels = 6;
  c.backbone_dim = 16;
  c.heads = {{Level::S, 8}, {Level::SV, 8}, {Level::SVC, 8}};
  return c;
}

// Concatenated one-hot axes for s, sv and svc: nested, perfectly separated.
Matrix one_hot(const std::vector<FrameRecord>& records, const LabelRegistry& reg) {
  const std::size_t ns = reg.class_count(Level::S), nsv = reg.class_count(Level::SV);
  Matrix m(records.size(), ns + nsv + reg.class_count(Level::SVC));
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& l = records[i].label;
    m(i, reg.ordinal(project(l, Level::S), Level::S)) = 1.0;
    m(i, ns + reg.ordinal(project(l, Level::SV), Level::SV)) = 1.0;
    m(i, ns + nsv + reg.ordinal(project(l, Level::SVC), Level::SVC)) = 1.0;
  }
  return m;
}

}  // namespace

TEST_CASE("separated embeddings score perfectly at every level") {
  const auto fx = toy::build(spec());
  const auto records = fx.manifest.split_records(Split::Test);
  EvalOptions options;
  options.levels = {Level::S, Level::SV, Level::SVC};
  const auto report = evaluate_embeddings(one_hot(records, *fx.manifest.registry), records, options);
  REQUIRE(report.levels.size() == 3);
  CHECK(report.database_size + report.query_size == records.size());
  CHECK(report.database_size >= report.query_size);
  CHECK(report.hierarchy_violations == 0);
  for (const auto& m : report.levels) {
    CHECK(m.retrieval.precision_at_1.macro == 1.0);
    CHECK(m.retrieval.r_precision.macro == 1.0);
    CHECK(m.retrieval.map_at_r.macro == 1.0);
  }
  CHECK(report.at(Level::SVC).ami == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(report.at(Level::SVC).num_classes == 18);
  CHECK(report.at(Level::S).num_classes == 3);
}

TEST_CASE("random network on labels unrelated to content is at chance") {
  auto s = spec();
  s.software_count = 2;
  s.test_per_class = 34;
  const auto fx = toy::build(s);
  auto manifest = fx.manifest;
  Rng rng(99);
  for (auto& r : manifest.records) {
    const auto& pairs = manifest.registry->software_views();
    const auto& [software, view] = pairs[uniform_index(rng, pairs.size())];
    r.label.software = software;
    r.label.view = view;
  }
  const auto params = init_params(tiny_model(), 4);
  EvalOptions options;
  options.levels = {Level::SV};
  options.source = fx.source();
  const auto report = evaluate(params, manifest, options);
  CHECK(report.at(Level::SV).num_classes == 4);
  CHECK(std::abs(report.at(Level::SV).retrieval.precision_at_1.macro - 0.25) < 0.12);
}

TEST_CASE("all report levels come from the chosen head") {
  const auto fx = toy::build(spec());
  const auto params = init_params(tiny_model(), 4);
  EvalOptions options;
  options.levels = {Level::S, Level::SV, Level::SVC};
  options.source = fx.source();
  const auto report = evaluate(params, fx.manifest, options);
  const auto j = to_json(report);
  CHECK(j["head"] == "svc");
  REQUIRE(j["levels"].size() == 3);
  for (const auto& level : j["levels"])
    for (const char* key : {"level", "num_classes", "ami", "precision_at_1", "r_precision", "map_at_r",
                            "skipped_queries", "skipped_classes", "per_class"})
      CHECK(level.contains(key));

  const auto records = fx.manifest.split_records(Split::Test);
  const auto embeddings = embed_images(params, records.size(),
                                       [&](std::size_t i) { return fx.source()(records[i]); });
  const auto direct = evaluate_embeddings(embeddings, records, options);
  CHECK(to_json(direct) == j);

  options.head = Level::S;
  CHECK(to_json(evaluate(params, fx.manifest, options))["head"] == "s");
}

TEST_CASE("evaluation errors") {
  const auto fx = toy::build(spec());
  auto records = fx.manifest.split_records(Split::Test);
  const auto emb = one_hot(records, *fx.manifest.registry);
  EvalOptions options;
  records[3].context_observed = false;
  CHECK_THROWS_AS(evaluate_embeddings(emb, records, options), ValidationError);
  options.levels = {Level::SV};
  CHECK_NOTHROW(evaluate_embeddings(emb, records, options));
  records.pop_back();
  CHECK_THROWS_AS(evaluate_embeddings(emb, records, options), DimensionMismatch);
}

TEST_CASE("embedding export writes a flat binary and a sidecar") {
  testing_support::TempDir dir("export");
  const auto fx = toy::build(spec());
  const auto records = fx.manifest.split_records(Split::Test);
  const auto emb = one_hot(records, *fx.manifest.registry);
  export_embeddings(emb, records, Level::SVC, dir.path() / "out" / "emb");
  std::ifstream bin(dir.path() / "out" / "emb.bin", std::ios::binary);
  std::vector<double> values(emb.data.size());
  bin.read(reinterpret_cast<char*>(values.data()), static_cast<std::streamsize>(values.size() * 8));
  CHECK(bin.gcount() == static_cast<std::streamsize>(values.size() * 8));
  CHECK(values == emb.data);
  std::ifstream js(dir.path() / "out" / "emb.json");
  const auto side = nlohmann::json::parse(js);
  CHECK(side["rows"] == emb.rows);
  CHECK(side["cols"] == emb.cols);
  CHECK(side["dtype"] == "float64");
  CHECK(side["labels"].size() == records.size());
  CHECK(side["labels"][0]["video_id"] == records[0].video_id);
}
