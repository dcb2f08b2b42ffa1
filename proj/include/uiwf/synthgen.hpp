#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "uiwf/dataset.hpp"
#include "uiwf/image.hpp"
#include "uiwf/labels.hpp"
#include "uiwf/rng.hpp"

namespace uiwf {

struct MenuAsset {
  ImageBuffer image;  // tight crop of a context menu
  std::string software_condition;
  std::string source_id;
};

struct SelectionAsset {
  // Narrowest selection crop that still supports width cropping.
  static constexpr int kMinWidth = 4;

  ImageBuffer image;  // tight crop of a text selection
  std::string source_id;
};

struct AssetDB {
  std::map<std::string, std::vector<MenuAsset>> menus;  // by software class
  std::vector<SelectionAsset> selections;

  void add_menu(MenuAsset asset);
  void add_selection(SelectionAsset asset);

  // Layout: menus/<software>/<id>.png and selections/<id>.png. Software
  // directory names must be registered classes.
  static AssetDB load(const std::filesystem::path& dir, const LabelRegistry& registry);
};

// Narrowest crop kept by the selection generator, as a fraction of the asset width.
inline constexpr double kSelectionMinWidthFraction = 0.25;

struct Placement {
  ContextValue generator = ContextValue::None;
  std::string source_id;
  Rect rect;                // pasted region in the output image
  double scale = 1.0;       // downscale applied to fit (1 = none)
  int crop_x = 0;           // selection only: horizontal crop window
  int crop_width = 0;
  bool flipped = false;     // selection only

  friend bool operator==(const Placement&, const Placement&) = default;
};

struct Synthesized {
  ImageBuffer image;
  ContextValue context = ContextValue::None;
  Placement placement;
};

// Largest size with the same aspect ratio that fits inside the bounds; never
// upscales.
std::pair<int, int> fit_within(int width, int height, int max_width, int max_height);

Synthesized gen_context_menu(const ImageBuffer& image, const std::string& software,
                             const AssetDB& db, Rng& rng);

// Deterministic half of the selection generator: crop window, optional flip,
// fit-to-bounds, then paste at (x, y).
struct SelectionTransform {
  int crop_x = 0;
  int crop_width = 0;
  bool flip = false;
  int x = 0;
  int y = 0;
};
ImageBuffer prepare_selection(const ImageBuffer& asset, const SelectionTransform& t,
                              int max_width, int max_height, double* scale = nullptr);
Synthesized compose_selection(const ImageBuffer& image, const SelectionAsset& asset,
                              const SelectionTransform& t);

Synthesized gen_selected_text(const ImageBuffer& image, const AssetDB& db, Rng& rng);

struct AugmentPlanEntry {
  std::size_t record_index = 0;  // into the manifest's record list
  ContextValue generator = ContextValue::None;
  std::uint64_t stream_seed = 0;
};

// Chooses floor(fraction * N) natural training records without replacement
// and a generator for each, uniformly between menu and selection. The plan
// is ordered by record index.
std::vector<AugmentPlanEntry> plan_augmentation(const DatasetManifest& manifest, double fraction,
                                                std::uint64_t seed);

// Per-record stream: global seed mixed with the record identity.
std::uint64_t record_stream_seed(std::uint64_t seed, const FrameRecord& record);

Synthesized synthesize(const AugmentPlanEntry& entry, const FrameRecord& record,
                       const ImageBuffer& base, const AssetDB& db);

struct AugmentResult {
  DatasetManifest manifest;       // originals followed by synthetic records
  std::vector<Placement> placements;  // one per synthetic record, same order
};

using ImageSink = std::function<void(const FrameRecord&, const ImageBuffer&)>;

// Synthesizes one instance per planned record and appends the synthetic
// records; images are handed to `sink`. Errors name the offending record.
AugmentResult augment_dataset(const DatasetManifest& manifest, const AssetDB& db,
                              double fraction, std::uint64_t seed, const ImageSource& source,
                              const ImageSink& sink);

}  // namespace uiwf
