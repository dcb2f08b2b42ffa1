#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "uiwf/image.hpp"
#include "uiwf/labels.hpp"

namespace uiwf {

enum class Split { Train, Test };

std::string_view to_string(Split split) noexcept;
Split split_from_string(std::string_view text);

struct FrameRecord {
  std::string video_id;
  std::uint64_t frame_index = 0;
  std::string image_path;  // relative to the manifest root
  ChainLabel label;
  // False when the context component was never annotated; the label then
  // carries ContextValue::None as a placeholder.
  bool context_observed = false;
  bool synthetic = false;
  Split split = Split::Train;

  friend bool operator==(const FrameRecord&, const FrameRecord&) = default;
};

// Conventional location of a frame under a manifest root.
std::string default_image_path(std::string_view video_id, std::uint64_t frame_index,
                               bool synthetic = false);

struct DatasetManifest {
  std::filesystem::path root;
  std::shared_ptr<const LabelRegistry> registry;
  std::vector<FrameRecord> records;

  std::filesystem::path resolve(const FrameRecord& record) const { return root / record.image_path; }
  std::vector<FrameRecord> split_records(Split split) const;
};

// Throws ValidationError naming the first offending record.
void validate(const DatasetManifest& manifest);

// One JSON object per line. The manifest root is the file's directory.
DatasetManifest load_manifest(const std::filesystem::path& path,
                              std::shared_ptr<const LabelRegistry> registry);
DatasetManifest parse_manifest(std::string_view jsonl, std::filesystem::path root,
                               std::shared_ptr<const LabelRegistry> registry);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);
std::string serialize_record(const FrameRecord& record);
std::string serialize_manifest(const DatasetManifest& manifest);

ImageBuffer load_image(const DatasetManifest& manifest, const FrameRecord& record);

using ImageSource = std::function<ImageBuffer(const FrameRecord&)>;
ImageSource disk_image_source(const DatasetManifest& manifest);

struct DatabaseQuerySplit {
  std::vector<FrameRecord> database;
  std::vector<FrameRecord> query;
};

// Partitions test records by whole videos so that the two halves' frame
// counts are as close as possible. Among optimal partitions the choice is
// fixed by `seed`. The larger half becomes the database.
DatabaseQuerySplit split_database_query(const std::vector<FrameRecord>& test_records,
                                        std::uint64_t seed);

struct ClassShare {
  std::string key;  // display form, e.g. "Mail / Gmail"
  std::size_t count = 0;
  double percentage = 0.0;
};

// Per-class percentage table, ordered by registry enumeration order.
std::vector<ClassShare> label_stats(const DatasetManifest& manifest, Level level);
// Distribution of the context component alone (Menu / SelectedText / None),
// over records whose context was observed.
std::vector<ClassShare> context_stats(const DatasetManifest& manifest);

}  // namespace uiwf
