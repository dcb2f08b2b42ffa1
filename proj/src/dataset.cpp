#include "uiwf/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "json.hpp"
#include "uiwf/error.hpp"
#include "uiwf/rng.hpp"

namespace uiwf {

using nlohmann::json;

std::string_view to_string(Split split) noexcept {
  return split == Split::Train ? "train" : "test";
}

Split split_from_string(std::string_view text) {
  if (text == "train") return Split::Train;
  if (text == "test") return Split::Test;
  throw ParseError("unknown split '" + std::string(text) + "'", 0);
}

std::string default_image_path(std::string_view video_id, std::uint64_t frame_index,
                               bool synthetic) {
  std::string out(video_id);
  out += '/';
  out += std::to_string(frame_index);
  if (synthetic) out += "_synth";
  out += ".png";
  return out;
}

std::vector<FrameRecord> DatasetManifest::split_records(Split split) const {
  std::vector<FrameRecord> out;
  std::copy_if(records.begin(), records.end(), std::back_inserter(out),
               [split](const FrameRecord& r) { return r.split == split; });
  return out;
}

namespace {

std::string describe(const FrameRecord& r) {
  return "record (" + r.video_id + ", " + std::to_string(r.frame_index) +
         (r.synthetic ? ", synthetic)" : ")");
}

bool escapes_root(const std::string& image_path) {
  const std::filesystem::path p(image_path);
  if (p.empty() || p.is_absolute() || p.has_root_name()) return true;
  return std::any_of(p.begin(), p.end(), [](const auto& part) { return part == ".."; });
}

}  // namespace

void validate(const DatasetManifest& manifest) {
  if (!manifest.registry) throw ValidationError("manifest has no label registry");
  std::set<std::tuple<std::string, std::uint64_t, bool>> identities;
  std::map<std::string, Split> video_split;
  for (const auto& r : manifest.records) {
    if (r.video_id.empty()) throw ValidationError(describe(r) + ": empty video_id");
    try {
      validate(r.label, *manifest.registry);
    } catch (const UnknownClass& e) {
      throw ValidationError(describe(r) + ": " + e.what());
    }
    if (escapes_root(r.image_path))
      throw ValidationError(describe(r) + ": image_path '" + r.image_path +
                            "' does not resolve under the manifest root");
    if (!identities.emplace(r.video_id, r.frame_index, r.synthetic).second)
      throw ValidationError(describe(r) + ": duplicate (video_id, frame_index, synthetic)");
    const auto [it, inserted] = video_split.emplace(r.video_id, r.split);
    if (!inserted && it->second != r.split)
      throw ValidationError(describe(r) + ": video '" + r.video_id +
                            "' appears in both train and test splits");
  }
}

std::string serialize_record(const FrameRecord& r) {
  json j;
  j["video_id"] = r.video_id;
  j["frame_index"] = r.frame_index;
  j["image_path"] = r.image_path;
  j["label"] = {{"software", r.label.software},
                {"view", r.label.view},
                {"context", std::string(to_string(r.label.context))}};
  j["context_observed"] = r.context_observed;
  j["synthetic"] = r.synthetic;
  j["split"] = std::string(to_string(r.split));
  return j.dump();
}

std::string serialize_manifest(const DatasetManifest& manifest) {
  std::string out;
  for (const auto& r : manifest.records) {
    out += serialize_record(r);
    out += '\n';
  }
  return out;
}

namespace {

FrameRecord parse_record(const json& j, std::size_t line) {
  auto require = [&](const char* key) -> const json& {
    if (!j.contains(key)) throw ParseError(std::string("missing field '") + key + "'", line);
    return j.at(key);
  };
  try {
    FrameRecord r;
    r.video_id = require("video_id").get<std::string>();
    r.frame_index = require("frame_index").get<std::uint64_t>();
    r.image_path = require("image_path").get<std::string>();
    const auto& label = require("label");
    if (!label.is_object()) throw ParseError("field 'label' must be an object", line);
    r.label.software = label.at("software").get<std::string>();
    r.label.view = label.at("view").get<std::string>();
    r.label.context = context_from_string(label.at("context").get<std::string>());
    r.context_observed = require("context_observed").get<bool>();
    r.synthetic = require("synthetic").get<bool>();
    r.split = split_from_string(require("split").get<std::string>());
    return r;
  } catch (const ParseError& e) {
    if (e.line() != 0) throw;
    throw ParseError(e.what(), line);
  } catch (const json::exception& e) {
    throw ParseError(e.what(), line);
  }
}

}  // namespace

DatasetManifest parse_manifest(std::string_view jsonl, std::filesystem::path root,
                               std::shared_ptr<const LabelRegistry> registry) {
  DatasetManifest manifest{std::move(root), std::move(registry), {}};
  std::size_t line_no = 0;
  while (!jsonl.empty()) {
    ++line_no;
    const auto nl = jsonl.find('\n');
    auto line = jsonl.substr(0, nl);
    jsonl = nl == std::string_view::npos ? std::string_view{} : jsonl.substr(nl + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(e.what(), line_no);
    }
    if (!j.is_object()) throw ParseError("expected a JSON object", line_no);
    manifest.records.push_back(parse_record(j, line_no));
  }
  validate(manifest);
  return manifest;
}

DatasetManifest load_manifest(const std::filesystem::path& path,
                              std::shared_ptr<const LabelRegistry> registry) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  auto root = path.has_parent_path() ? path.parent_path() : std::filesystem::path(".");
  try {
    return parse_manifest(buf.str(), std::move(root), std::move(registry));
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what(), e.line());
  }
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  validate(manifest);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << serialize_manifest(manifest);
  if (!out) throw IoError("failed writing manifest " + path.string());
}

ImageBuffer load_image(const DatasetManifest& manifest, const FrameRecord& record) {
  return read_png(manifest.resolve(record));
}

ImageSource disk_image_source(const DatasetManifest& manifest) {
  return [root = manifest.root](const FrameRecord& r) { return read_png(root / r.image_path); };
}

DatabaseQuerySplit split_database_query(const std::vector<FrameRecord>& test_records,
                                        std::uint64_t seed) {
  std::map<std::string, std::size_t> sizes;
  for (const auto& r : test_records) ++sizes[r.video_id];
  if (sizes.size() < 2)
    throw InvalidArgument("database/query split needs at least 2 video ids, got " +
                          std::to_string(sizes.size()));

  std::vector<std::pair<std::string, std::size_t>> videos(sizes.begin(), sizes.end());
  Rng rng(derive_seed(seed, "database-query-split"));
  shuffle(std::span(videos), rng);

  const std::size_t total = test_records.size();
  const std::size_t n = videos.size();
  std::vector<bool> in_first(n, false);

  if (n * (total + 1) <= (std::size_t{1} << 28)) {
    // Subset-sum table: reach[i][s] = some subset of the first i videos sums to s.
    std::vector<std::vector<bool>> reach(n + 1, std::vector<bool>(total + 1, false));
    reach[0][0] = true;
    for (std::size_t i = 1; i <= n; ++i) {
      const std::size_t w = videos[i - 1].second;
      for (std::size_t s = 0; s <= total; ++s)
        reach[i][s] = reach[i - 1][s] || (s >= w && reach[i - 1][s - w]);
    }
    std::size_t best = total / 2;
    while (!reach[n][best]) --best;
    for (std::size_t i = n, s = best; i > 0; --i) {
      if (!reach[i - 1][s]) {
        in_first[i - 1] = true;
        s -= videos[i - 1].second;
      }
    }
  } else {
    // Too large for the exact table; largest-first greedy packing.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return videos[a].second > videos[b].second;
    });
    std::size_t first = 0, second = 0;
    for (const auto i : order) {
      if (first < second) {
        in_first[i] = true;
        first += videos[i].second;
      } else {
        second += videos[i].second;
      }
    }
  }

  std::set<std::string> first_ids;
  std::size_t first_count = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (in_first[i]) {
      first_ids.insert(videos[i].first);
      first_count += videos[i].second;
    }
  }
  // The larger half is the database.
  const bool first_is_database = first_count * 2 > total;
  DatabaseQuerySplit out;
  for (const auto& r : test_records) {
    const bool first = first_ids.count(r.video_id) != 0;
    (first == first_is_database ? out.database : out.query).push_back(r);
  }
  return out;
}

namespace {

std::vector<ClassShare> to_table(const std::map<std::pair<std::size_t, std::string>,
                                                std::size_t>& counts,
                                 std::size_t total) {
  std::vector<ClassShare> out;
  for (const auto& [key, count] : counts)
    out.push_back({key.second, count, 100.0 * static_cast<double>(count) / total});
  return out;
}

}  // namespace

std::vector<ClassShare> label_stats(const DatasetManifest& manifest, Level level) {
  if (!manifest.registry) throw ValidationError("manifest has no label registry");
  std::map<LevelKey, std::size_t> by_key;
  for (const auto& r : manifest.records) ++by_key[project(r.label, level)];
  std::map<std::pair<std::size_t, std::string>, std::size_t> counts;
  for (const auto& [key, count] : by_key)
    counts[{manifest.registry->ordinal(key, level), key.display()}] = count;
  return to_table(counts, manifest.records.size());
}

std::vector<ClassShare> context_stats(const DatasetManifest& manifest) {
  std::map<std::pair<std::size_t, std::string>, std::size_t> counts;
  std::size_t total = 0;
  for (const auto& r : manifest.records) {
    if (!r.context_observed) continue;
    const auto c = r.label.context;
    const auto ordinal = static_cast<std::size_t>(
        std::find(kAllContexts.begin(), kAllContexts.end(), c) - kAllContexts.begin());
    ++counts[{ordinal, std::string(to_string(c))}];
    ++total;
  }
  return to_table(counts, total);
}

}  // namespace uiwf
