#include "uiwf/evaluate.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "uiwf/error.hpp"
#include "uiwf/rng.hpp"

namespace uiwf {

using nlohmann::json;

const LevelMetrics& MetricsReport::at(Level level) const {
  for (const auto& l : levels)
    if (l.level == level) return l;
  throw InvalidArgument("report has no " + std::string(to_string(level)) + " block");
}

namespace {

Matrix gather(const Matrix& m, const std::vector<std::size_t>& rows) {
  Matrix out(rows.size(), m.cols);
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy_n(m.row(rows[i]).begin(), m.cols, out.row(i).begin());
  return out;
}

}  // namespace

MetricsReport evaluate_embeddings(const Matrix& embeddings, const std::vector<FrameRecord>& records,
                                  const EvalOptions& options) {
  if (embeddings.rows != records.size())
    throw DimensionMismatch("one embedding row per test record required");
  if (options.levels.empty()) throw InvalidArgument("no evaluation levels requested");
  for (const auto l : options.levels) {
    if (l != Level::SVC) continue;
    for (const auto& r : records)
      if (!r.context_observed)
        throw ValidationError("svc evaluation needs context labels; record (" + r.video_id + ", " +
                              std::to_string(r.frame_index) + ") has none");
  }

  // Split on positions so that embeddings stay aligned.
  std::vector<FrameRecord> tagged = records;
  for (std::size_t i = 0; i < tagged.size(); ++i) tagged[i].frame_index = i;
  const auto split = split_database_query(tagged, options.seed);
  std::vector<std::size_t> db_rows, q_rows;
  std::set<std::string> db_videos;
  for (const auto& r : split.database) {
    db_rows.push_back(r.frame_index);
    db_videos.insert(r.video_id);
  }
  for (const auto& r : split.query) {
    if (db_videos.count(r.video_id))
      throw ValidationError("query video '" + r.video_id + "' also appears in the database");
    q_rows.push_back(r.frame_index);
  }

  MetricsReport report;
  report.head = options.head;
  report.database_size = db_rows.size();
  report.query_size = q_rows.size();

  RetrievalIndex index;
  index.database = gather(embeddings, db_rows);
  index.queries = gather(embeddings, q_rows);

  // Nearest neighbour of each query, shared by every level.
  std::vector<std::size_t> nearest(q_rows.size(), 0);
  if (!db_rows.empty()) {
    index.database_keys.assign(db_rows.size(), {});
    index.query_keys.assign(q_rows.size(), {});
    for (std::size_t q = 0; q < q_rows.size(); ++q) nearest[q] = knn_retrieve(index, q, 1).front();
  }
  for (std::size_t q = 0; q < q_rows.size() && !db_rows.empty(); ++q) {
    const auto& truth = records[q_rows[q]].label;
    const auto& predicted = records[db_rows[nearest[q]]].label;
    for (std::size_t hi = 1; hi < kAllLevels.size(); ++hi)
      for (std::size_t lo = 0; lo < hi; ++lo)
        if (project(truth, kAllLevels[hi]) == project(predicted, kAllLevels[hi]) &&
            project(truth, kAllLevels[lo]) != project(predicted, kAllLevels[lo]))
          ++report.hierarchy_violations;
  }

  for (const auto level : options.levels) {
    LevelMetrics m;
    m.level = level;
    index.database_keys.clear();
    index.query_keys.clear();
    for (const auto i : db_rows) index.database_keys.push_back(project(records[i].label, level).value);
    for (const auto i : q_rows) index.query_keys.push_back(project(records[i].label, level).value);
    m.retrieval = retrieval_scores(index);

    std::vector<std::string> keys;
    keys.reserve(records.size());
    for (const auto& r : records) keys.push_back(project(r.label, level).value);
    const auto truth = Partition::from_keys(keys);
    m.num_classes = static_cast<std::size_t>(truth.k);
    const auto clusters = kmeans(embeddings, truth.k,
                                 derive_seed(options.seed, std::string("kmeans-") +
                                                               std::string(to_string(level))),
                                 options.kmeans);
    m.ami = ami(truth, clusters.partition);
    report.levels.push_back(std::move(m));
  }
  return report;
}

MetricsReport evaluate(const ModelParams& params, const DatasetManifest& manifest,
                       const EvalOptions& options) {
  const auto records = manifest.split_records(Split::Test);
  if (records.empty()) throw InvalidArgument("manifest has no test records");
  const ImageSource source = options.source ? options.source : disk_image_source(manifest);
  const auto embeddings = embed_images(
      params, records.size(), [&](std::size_t i) { return source(records[i]); }, options.head,
      options.workers);
  return evaluate_embeddings(embeddings, records, options);
}

namespace {

std::string display_key(const std::string& key) { return LevelKey{key}.display(); }

}  // namespace

json to_json(const MetricsReport& report) {
  json levels = json::array();
  for (const auto& m : report.levels) {
    json per_class = json::array();
    const auto& r = m.retrieval;
    for (std::size_t i = 0; i < r.precision_at_1.per_class.size(); ++i) {
      const auto& c = r.precision_at_1.per_class[i];
      per_class.push_back({{"class", display_key(c.key)},
                           {"queries", c.queries},
                           {"precision_at_1", c.score},
                           {"r_precision", r.r_precision.per_class[i].score},
                           {"map_at_r", r.map_at_r.per_class[i].score}});
    }
    levels.push_back({{"level", std::string(to_string(m.level))},
                      {"num_classes", m.num_classes},
                      {"ami", m.ami},
                      {"precision_at_1", r.precision_at_1.macro},
                      {"r_precision", r.r_precision.macro},
                      {"map_at_r", r.map_at_r.macro},
                      {"skipped_queries", r.precision_at_1.skipped_queries},
                      {"skipped_classes", r.precision_at_1.skipped_classes},
                      {"per_class", per_class}});
  }
  return {{"head", std::string(to_string(report.head))},
          {"database_size", report.database_size},
          {"query_size", report.query_size},
          {"hierarchy_violations", report.hierarchy_violations},
          {"levels", levels}};
}

void export_embeddings(const Matrix& embeddings, const std::vector<FrameRecord>& records,
                       Level head, const std::filesystem::path& stem) {
  if (embeddings.rows != records.size())
    throw DimensionMismatch("one embedding row per record required");
  if (stem.has_parent_path()) std::filesystem::create_directories(stem.parent_path());
  auto bin_path = stem;
  bin_path += ".bin";
  auto json_path = stem;
  json_path += ".json";
  {
    std::ofstream out(bin_path, std::ios::binary);
    if (!out) throw IoError("cannot write " + bin_path.string());
    out.write(reinterpret_cast<const char*>(embeddings.data.data()),
              static_cast<std::streamsize>(embeddings.data.size() * sizeof(double)));
  }
  json labels = json::array();
  for (const auto& r : records)
    labels.push_back({{"video_id", r.video_id},
                      {"frame_index", r.frame_index},
                      {"software", r.label.software},
                      {"view", r.label.view},
                      {"context", std::string(to_string(r.label.context))},
                      {"split", std::string(to_string(r.split))},
                      {"synthetic", r.synthetic}});
  const json sidecar = {{"rows", embeddings.rows},
                        {"cols", embeddings.cols},
                        {"dtype", "float64"},
                        {"byte_order", "little"},
                        {"layout", "row-major"},
                        {"head", std::string(to_string(head))},
                        {"data_file", bin_path.filename().string()},
                        {"labels", labels}};
  std::ofstream out(json_path, std::ios::binary);
  if (!out) throw IoError("cannot write " + json_path.string());
  out << sidecar.dump(2) << '\n';
}

}  // namespace uiwf
