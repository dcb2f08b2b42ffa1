#include "uiwf/synthgen.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "uiwf/error.hpp"

namespace uiwf {

namespace fs = std::filesystem;

void AssetDB::add_menu(MenuAsset asset) {
  if (asset.image.empty()) throw InvalidArgument("menu asset '" + asset.source_id + "' is empty");
  auto& pool = menus[asset.software_condition];
  pool.push_back(std::move(asset));
}

void AssetDB::add_selection(SelectionAsset asset) {
  if (asset.image.empty() || asset.image.width < SelectionAsset::kMinWidth)
    throw InvalidArgument("selection asset '" + asset.source_id + "' narrower than " +
                          std::to_string(SelectionAsset::kMinWidth) + " px");
  selections.push_back(std::move(asset));
}

namespace {

std::vector<fs::path> sorted_pngs(const fs::path& dir) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".png") out.push_back(entry.path());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

AssetDB AssetDB::load(const fs::path& dir, const LabelRegistry& registry) {
  if (!fs::is_directory(dir)) throw IoError("asset directory not found: " + dir.string());
  AssetDB db;
  const auto menu_root = dir / "menus";
  if (fs::is_directory(menu_root)) {
    std::vector<fs::path> classes;
    for (const auto& entry : fs::directory_iterator(menu_root))
      if (entry.is_directory()) classes.push_back(entry.path());
    std::sort(classes.begin(), classes.end());
    for (const auto& class_dir : classes) {
      const auto software = class_dir.filename().string();
      if (!registry.contains_software(software))
        throw UnknownClass("menu assets for unregistered software class '" + software + "'");
      for (const auto& png : sorted_pngs(class_dir))
        db.add_menu({read_png(png), software, software + "/" + png.stem().string()});
    }
  }
  for (const auto& png : sorted_pngs(dir / "selections"))
    db.add_selection({read_png(png), png.stem().string()});
  return db;
}

std::pair<int, int> fit_within(int width, int height, int max_width, int max_height) {
  if (width <= max_width && height <= max_height) return {width, height};
  const double scale = std::min(static_cast<double>(max_width) / width,
                                static_cast<double>(max_height) / height);
  const int w = std::clamp(static_cast<int>(std::floor(width * scale + 1e-9)), 1, max_width);
  const int h = std::clamp(static_cast<int>(std::floor(height * scale + 1e-9)), 1, max_height);
  return {w, h};
}

namespace {

// Fits `patch` inside the base, records the applied scale.
ImageBuffer fit_patch(const ImageBuffer& patch, int max_width, int max_height, double* scale) {
  const auto [w, h] = fit_within(patch.width, patch.height, max_width, max_height);
  if (scale) *scale = static_cast<double>(w) / patch.width;
  if (w == patch.width && h == patch.height) return patch;
  return resize_bilinear(patch, w, h);
}

Rect random_position(int w, int h, int base_w, int base_h, Rng& rng) {
  const int x = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(base_w - w + 1)));
  const int y = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(base_h - h + 1)));
  return {x, y, w, h};
}

}  // namespace

Synthesized gen_context_menu(const ImageBuffer& image, const std::string& software,
                             const AssetDB& db, Rng& rng) {
  if (image.empty()) throw InvalidArgument("context menu generator: empty base image");
  const auto it = db.menus.find(software);
  if (it == db.menus.end() || it->second.empty())
    throw NoAssetForClass("no context menu assets for software class '" + software + "'");
  const auto& pool = it->second;
  const auto& asset = pool[uniform_index(rng, pool.size())];

  Synthesized out;
  out.context = ContextValue::Menu;
  out.placement.generator = ContextValue::Menu;
  out.placement.source_id = asset.source_id;
  const auto patch = fit_patch(asset.image, image.width, image.height, &out.placement.scale);
  out.placement.rect = random_position(patch.width, patch.height, image.width, image.height, rng);
  out.placement.crop_width = patch.width;
  out.image = image;
  paste(out.image, patch, out.placement.rect.x, out.placement.rect.y);
  return out;
}

ImageBuffer prepare_selection(const ImageBuffer& asset, const SelectionTransform& t,
                              int max_width, int max_height, double* scale) {
  if (t.crop_width < 1 || t.crop_x < 0 || t.crop_x + t.crop_width > asset.width)
    throw InvalidArgument("selection crop window outside asset");
  auto patch = crop(asset, {t.crop_x, 0, t.crop_width, asset.height});
  if (t.flip) patch = flip_horizontal(patch);
  return fit_patch(patch, max_width, max_height, scale);
}

Synthesized compose_selection(const ImageBuffer& image, const SelectionAsset& asset,
                              const SelectionTransform& t) {
  Synthesized out;
  out.context = ContextValue::SelectedText;
  out.placement.generator = ContextValue::SelectedText;
  out.placement.source_id = asset.source_id;
  out.placement.crop_x = t.crop_x;
  out.placement.crop_width = t.crop_width;
  out.placement.flipped = t.flip;
  const auto patch =
      prepare_selection(asset.image, t, image.width, image.height, &out.placement.scale);
  out.placement.rect = {t.x, t.y, patch.width, patch.height};
  out.image = image;
  paste(out.image, patch, t.x, t.y);
  return out;
}

Synthesized gen_selected_text(const ImageBuffer& image, const AssetDB& db, Rng& rng) {
  if (image.empty()) throw InvalidArgument("selected text generator: empty base image");
  if (db.selections.empty()) throw EmptySelectionDB("selection asset database is empty");
  const auto& asset = db.selections[uniform_index(rng, db.selections.size())];

  const int full = asset.image.width;
  const int min_width =
      std::clamp(static_cast<int>(std::ceil(kSelectionMinWidthFraction * full)), 1, full);
  SelectionTransform t;
  t.crop_width = min_width + static_cast<int>(uniform_index(rng, full - min_width + 1));
  t.crop_x = static_cast<int>(uniform_index(rng, full - t.crop_width + 1));
  t.flip = bernoulli(rng, 0.5);
  const auto [w, h] = fit_within(t.crop_width, asset.image.height, image.width, image.height);
  const auto pos = random_position(w, h, image.width, image.height, rng);
  t.x = pos.x;
  t.y = pos.y;
  return compose_selection(image, asset, t);
}

std::uint64_t record_stream_seed(std::uint64_t seed, const FrameRecord& record) {
  return derive_seed(seed ^ fnv1a64(record.video_id), record.frame_index);
}

namespace {

ContextValue draw_generator(Rng& stream) {
  return bernoulli(stream, 0.5) ? ContextValue::Menu : ContextValue::SelectedText;
}

}  // namespace

std::vector<AugmentPlanEntry> plan_augmentation(const DatasetManifest& manifest, double fraction,
                                                std::uint64_t seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0))
    throw InvalidArgument("augmentation fraction must lie in [0, 1]");
  std::vector<std::size_t> pool;
  for (std::size_t i = 0; i < manifest.records.size(); ++i) {
    const auto& r = manifest.records[i];
    if (r.split == Split::Train && !r.synthetic) pool.push_back(i);
  }
  const auto count = static_cast<std::size_t>(
      std::floor(fraction * static_cast<double>(pool.size()) + 1e-9));

  Rng rng(derive_seed(seed, "augment-selection"));
  for (std::size_t i = 0; i < count; ++i) {
    const auto j = i + static_cast<std::size_t>(uniform_index(rng, pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  std::sort(pool.begin(), pool.end());

  std::vector<AugmentPlanEntry> plan;
  plan.reserve(count);
  for (const auto index : pool) {
    const auto stream_seed = record_stream_seed(seed, manifest.records[index]);
    Rng stream(stream_seed);
    plan.push_back({index, draw_generator(stream), stream_seed});
  }
  return plan;
}

Synthesized synthesize(const AugmentPlanEntry& entry, const FrameRecord& record,
                       const ImageBuffer& base, const AssetDB& db) {
  Rng stream(entry.stream_seed);
  const auto generator = draw_generator(stream);
  if (generator == ContextValue::Menu) return gen_context_menu(base, record.label.software, db, stream);
  return gen_selected_text(base, db, stream);
}

AugmentResult augment_dataset(const DatasetManifest& manifest, const AssetDB& db,
                              double fraction, std::uint64_t seed, const ImageSource& source,
                              const ImageSink& sink) {
  AugmentResult result{manifest, {}};
  for (const auto& entry : plan_augmentation(manifest, fraction, seed)) {
    const auto& base_record = manifest.records[entry.record_index];
    try {
      const auto base = source(base_record);
      auto synth = synthesize(entry, base_record, base, db);
      if (synth.image.width != base.width || synth.image.height != base.height)
        throw DimensionMismatch("synthesized image changed dimensions");

      FrameRecord record = base_record;
      record.synthetic = true;
      record.context_observed = true;
      record.label.context = synth.context;
      record.image_path = default_image_path(record.video_id, record.frame_index, true);
      if (sink) sink(record, synth.image);
      result.manifest.records.push_back(std::move(record));
      result.placements.push_back(std::move(synth.placement));
    } catch (const Error& e) {
      const std::string where = "record (" + base_record.video_id + ", " +
                                std::to_string(base_record.frame_index) + "): ";
      if (dynamic_cast<const NoAssetForClass*>(&e)) throw NoAssetForClass(where + e.what());
      if (dynamic_cast<const EmptySelectionDB*>(&e)) throw EmptySelectionDB(where + e.what());
      throw Error(where + e.what());
    }
  }
  return result;
}

}  // namespace uiwf
