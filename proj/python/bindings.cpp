#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "uiwf/cli.hpp"
#include "uiwf/error.hpp"
#include "uiwf/labels.hpp"
#include "uiwf/losses.hpp"
#include "uiwf/metrics.hpp"
#include "uiwf/motion.hpp"
#include "uiwf/rng.hpp"
#include "uiwf/synthgen.hpp"
#include "uiwf/version.hpp"

namespace py = pybind11;
using namespace uiwf;

namespace {

using F64Array = py::array_t<double, py::array::c_style | py::array::forcecast>;
using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

Matrix to_matrix(const F64Array& a) {
  if (a.ndim() != 2) throw DimensionMismatch("expected a 2-D array");
  Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), m.data.begin());
  return m;
}

py::array_t<double> from_matrix(const Matrix& m) {
  py::array_t<double> out({m.rows, m.cols});
  std::copy(m.data.begin(), m.data.end(), out.mutable_data());
  return out;
}

ImageBuffer to_image(const U8Array& a) {
  if (a.ndim() != 3 || a.shape(2) != 3) throw DimensionMismatch("expected an (H, W, 3) uint8 array");
  ImageBuffer img(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)));
  std::copy(a.data(), a.data() + a.size(), img.data.begin());
  return img;
}

py::array_t<std::uint8_t> from_image(const ImageBuffer& img) {
  py::array_t<std::uint8_t> out({img.height, img.width, 3});
  std::copy(img.data.begin(), img.data.end(), out.mutable_data());
  return out;
}

py::tuple key_tuple(const LevelKey& key) {
  py::list parts;
  std::stringstream s(key.value);
  for (std::string part; std::getline(s, part, '\t');) parts.append(part);
  return py::tuple(parts);
}

py::dict table_dict(const ClassTable& t) {
  py::dict per_class;
  for (const auto& c : t.per_class) per_class[py::str(c.key)] = c.score;
  py::dict d;
  d["macro"] = t.macro;
  d["per_class"] = per_class;
  d["skipped_queries"] = t.skipped_queries;
  d["skipped_classes"] = t.skipped_classes;
  return d;
}

py::dict placement_dict(const Placement& p) {
  py::dict d;
  d["generator"] = std::string(to_string(p.generator));
  d["source_id"] = p.source_id;
  d["rect"] = py::make_tuple(p.rect.x, p.rect.y, p.rect.width, p.rect.height);
  d["scale"] = p.scale;
  d["crop_x"] = p.crop_x;
  d["crop_width"] = p.crop_width;
  d["flipped"] = p.flipped;
  return d;
}

LabelRegistry registry_from(const std::string& path) {
  return path.empty() ? LabelRegistry::default_registry() : LabelRegistry::load(path);
}

}  // namespace

PYBIND11_MODULE(_uiwf, m) {
  m.attr("__version__") = std::string(kVersion);

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", error);
  py::register_exception<UnknownClass>(m, "UnknownClass", error);
  py::register_exception<ParseError>(m, "ParseError", error);
  py::register_exception<ValidationError>(m, "ValidationError", error);
  py::register_exception<DimensionMismatch>(m, "DimensionMismatch", error);
  py::register_exception<NoAssetForClass>(m, "NoAssetForClass", error);
  py::register_exception<EmptySelectionDB>(m, "EmptySelectionDB", error);
  py::register_exception<IoError>(m, "IoError", error);

  m.def("default_registry", [] { return LabelRegistry::default_registry().software_views(); },
        "Registered (software, view) pairs in table order.");

  m.def(
      "project",
      [](const std::string& software, const std::string& view, const std::string& context,
         const std::string& level) {
        return key_tuple(project({software, view, context_from_string(context)},
                                 level_from_string(level)));
      },
      py::arg("software"), py::arg("view"), py::arg("context") = "None", py::arg("level") = "svc",
      "Truncated chain key of a label at level s, sv or svc.");

  m.def(
      "validate",
      [](const std::string& software, const std::string& view, const std::string& context,
         const std::string& registry) {
        validate({software, view, context_from_string(context)}, registry_from(registry));
      },
      py::arg("software"), py::arg("view"), py::arg("context") = "None", py::arg("registry") = "",
      "Raises UnknownClass unless (software, view) is registered.");

  m.def(
      "motion_det",
      [](const std::vector<U8Array>& frames, double tc, double tb, int kg, int kd) {
        MotionConfig config;
        config.contour_area_threshold = tc;
        config.binarize_threshold = tb;
        config.blur_width = config.blur_height = kg;
        config.dilate_width = config.dilate_height = kd;
        std::vector<ImageBuffer> images;
        for (const auto& f : frames) images.push_back(to_image(f));
        std::vector<std::tuple<std::size_t, std::size_t, long long>> out;
        {
          py::gil_scoped_release release;
          for (const auto& t : motion_det(std::span<const ImageBuffer>(images), config))
            out.emplace_back(t.prev, t.next, t.max_area);
        }
        return out;
      },
      py::arg("frames"), py::arg("tc") = 500.0, py::arg("tb") = 40.0, py::arg("kg") = 5,
      py::arg("kd") = 5, "Saved (prev, next, max_area) transitions of a frame sequence.");

  m.def(
      "supcon_loss",
      [](const F64Array& embeddings, const std::vector<int>& classes, double temperature) {
        const Matrix e = to_matrix(embeddings);
        const auto r = supcon_loss({&e, classes, temperature});
        py::dict d;
        d["loss"] = r.loss;
        d["mean_loss"] = r.mean_loss;
        d["skipped_anchors"] = r.skipped_anchors;
        d["grad"] = from_matrix(r.grad);
        return d;
      },
      py::arg("embeddings"), py::arg("classes"), py::arg("temperature") = 0.1,
      "Supervised contrastive loss (sum over anchors) and its gradient.");

  m.def(
      "retrieval_scores",
      [](const F64Array& database, const std::vector<std::string>& database_keys,
         const F64Array& queries, const std::vector<std::string>& query_keys) {
        RetrievalIndex index{to_matrix(database), database_keys, to_matrix(queries), query_keys};
        const auto s = retrieval_scores(index);
        py::dict d;
        d["precision_at_1"] = table_dict(s.precision_at_1);
        d["r_precision"] = table_dict(s.r_precision);
        d["map_at_r"] = table_dict(s.map_at_r);
        return d;
      },
      py::arg("database"), py::arg("database_keys"), py::arg("queries"), py::arg("query_keys"),
      "Class-averaged Precision@1, R-Precision and mAP@R under cosine ranking.");

  m.def(
      "kmeans",
      [](const F64Array& points, int k, std::uint64_t seed, int n_init, int max_iter) {
        const auto r = kmeans(to_matrix(points), k, seed, {n_init, max_iter});
        return py::make_tuple(r.partition.labels, from_matrix(r.centroids), r.inertia);
      },
      py::arg("points"), py::arg("k"), py::arg("seed") = 0, py::arg("n_init") = 10,
      py::arg("max_iter") = 300, "k-means++ seeded Lloyd iterations: (labels, centroids, inertia).");

  m.def(
      "ami",
      [](const std::vector<int>& u, const std::vector<int>& v) {
        return ami(Partition::from_labels(u), Partition::from_labels(v));
      },
      py::arg("u"), py::arg("v"), "Adjusted mutual information (arithmetic normalisation).");

  m.def(
      "gen_context_menu",
      [](const U8Array& image, const std::string& software, const std::string& assets,
         std::uint64_t seed, const std::string& registry) {
        const auto db = AssetDB::load(assets, registry_from(registry));
        Rng rng(seed);
        const auto s = gen_context_menu(to_image(image), software, db, rng);
        return py::make_tuple(from_image(s.image), placement_dict(s.placement));
      },
      py::arg("image"), py::arg("software"), py::arg("assets"), py::arg("seed") = 0,
      py::arg("registry") = "", "Paste a menu of the given software: (image, placement).");

  m.def(
      "gen_selected_text",
      [](const U8Array& image, const std::string& assets, std::uint64_t seed,
         const std::string& registry) {
        const auto db = AssetDB::load(assets, registry_from(registry));
        Rng rng(seed);
        const auto s = gen_selected_text(to_image(image), db, rng);
        return py::make_tuple(from_image(s.image), placement_dict(s.placement));
      },
      py::arg("image"), py::arg("assets"), py::arg("seed") = 0, py::arg("registry") = "",
      "Paste a text-selection highlight: (image, placement).");

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code = 0;
        {
          py::gil_scoped_release release;
          code = cli::dispatch(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"),
      "Run a uiwf subcommand (dedup, synth, train, eval, export-embeddings, stats): "
      "(exit_code, stdout, stderr).");
}
