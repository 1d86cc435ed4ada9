#include "svmr/benchmark.hpp"
#include "svmr/data_model.hpp"
#include "svmr/error.hpp"
#include "svmr/gallery.hpp"
#include "svmr/grad_suite.hpp"
#include "svmr/maps.hpp"
#include "svmr/metrics.hpp"
#include "svmr/postprocess.hpp"
#include "svmr/stage1.hpp"
#include "svmr/stage2.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <numeric>
#include <random>
#include <string>
#include <tuple>
#include <vector>

namespace py = pybind11;
using namespace svmr;

namespace {

using Moment = std::tuple<std::string, double, double, double>;

std::vector<MomentPrediction> to_predictions(const std::vector<Moment>& in) {
  std::vector<MomentPrediction> out;
  out.reserve(in.size());
  for (const auto& [id, s, e, score] : in) out.push_back({id, s, e, score});
  return out;
}

std::vector<Moment> from_predictions(const std::vector<MomentPrediction>& in) {
  std::vector<Moment> out;
  out.reserve(in.size());
  for (const auto& p : in) out.emplace_back(p.video_id, p.t_start, p.t_end, p.score);
  return out;
}

using Span = std::pair<double, double>;

std::vector<LocalizationPair> to_pairs(const std::vector<std::pair<std::vector<Span>, std::vector<Span>>>& in) {
  std::vector<LocalizationPair> out;
  for (const auto& [pred, gt] : in) {
    LocalizationPair p;
    for (const auto& [a, b] : pred) p.predictions.push_back({a, b});
    for (const auto& [a, b] : gt) p.ground_truth.push_back({a, b});
    out.push_back(std::move(p));
  }
  return out;
}

ArCurve make_curve(const std::vector<double>& recall) {
  ArCurve c;
  c.recall = recall;
  c.thresholds = kDefaultTiouThresholds;
  return c;
}

// Writes a seeded synthetic corpus to `dir`; returns (queries, references).
std::pair<std::size_t, std::size_t> synth_corpus(const std::string& dir, std::uint64_t seed, int query_videos,
                                                 int reference_videos, int feature_channels) {
  SynthConfig sc;
  sc.seed = seed;
  sc.feature_channels = feature_channels;
  sc.validate();
  const SynthCorpus syn = synth_generate(sc, SynthSizes{query_videos, reference_videos});
  std::vector<int> classes(static_cast<std::size_t>(sc.num_classes));
  std::iota(classes.begin(), classes.end(), 0);
  std::mt19937_64 rng(seed);
  const Corpus corpus = build_corpus(syn.v1, syn.v2, ClassSplit::from_proportions(classes), rng);
  write_corpus(corpus, dir);
  return {corpus.queries.size(), corpus.references.size()};
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Two-stage video moment retrieval core";

  static py::exception<Error> error(m, "Error");
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(error, (std::string(error_kind_name(e.kind())) + ": " + e.what()).c_str());
    }
  });

  m.def(
      "tiou", [](Span a, Span b) { return tiou({a.first, a.second}, {b.first, b.second}); }, py::arg("a"), py::arg("b"),
      "Temporal IoU of two (start, end) intervals.");

  m.def(
      "soft_nms",
      [](const std::vector<Moment>& preds, double sigma, std::size_t top_k) {
        return from_predictions(soft_nms(to_predictions(preds), sigma, top_k));
      },
      py::arg("predictions"), py::arg("sigma") = 0.4, py::arg("top_k") = 100,
      "Gaussian soft-NMS over (video_id, t_start, t_end, score) tuples.");

  m.def(
      "ar_at_an",
      [](const std::vector<std::pair<std::vector<Span>, std::vector<Span>>>& pairs, std::size_t max_an) {
        return ar_at_an(to_pairs(pairs), max_an).recall;
      },
      py::arg("pairs"), py::arg("max_an") = 100,
      "Average recall for AN = 1..max_an over (predictions, ground_truth) pairs.");

  m.def(
      "auc", [](const std::vector<double>& recall) { return auc(make_curve(recall)); }, py::arg("recall"),
      "Area under an AR@AN curve, x100.");

  m.def("bm_mask", &bm_mask, py::arg("length"), "L x L validity mask of the boundary-matching grid.");

  m.def(
      "bm_sample", [](const Matrix& reference, Index samples) { return bm_sample(reference, samples).data; },
      py::arg("reference"), py::arg("samples"), "Boundary-matching feature map, rows c*N+n, columns s*L+d.");

  m.def(
      "max_cos_similarity", [](const Vector& q, const Matrix& r) { return max_cos_similarity(q, r); }, py::arg("query"),
      py::arg("reference"), "Maximum cosine similarity between a query vector and the reference columns.");

  m.def(
      "load_features",
      [](const std::string& path) {
        const FeatureSequence seq = load_features(path);
        return py::make_tuple(seq.video_id, seq.duration_sec, seq.data);
      },
      py::arg("path"), "Reads an SVMF feature file as (video_id, duration_sec, features).");

  m.def("synth_corpus", &synth_corpus, py::arg("dir"), py::arg("seed") = 0, py::arg("query_videos") = 200,
        py::arg("reference_videos") = 400, py::arg("feature_channels") = 64,
        "Generates and writes a synthetic corpus; returns (queries, references).");

  m.def(
      "run_grad_suite",
      [](const std::vector<std::uint64_t>& seeds) {
        py::list out;
        for (const auto& e : nn::run_grad_suite(seeds)) {
          py::dict d;
          d["name"] = e.name;
          d["seed"] = e.seed;
          d["max_rel_error"] = e.max_rel_error;
          d["tolerance"] = e.tolerance;
          d["passed"] = e.passed();
          out.append(d);
        }
        return out;
      },
      py::arg("seeds"), "Finite-difference gradient checks.");

  py::class_<GalleryIndex>(m, "GalleryIndex")
      .def_static("load", [](const std::string& path) { return GalleryIndex::load(path); })
      .def_static("build", py::overload_cast<const std::vector<std::pair<std::string, Matrix>>&>(&GalleryIndex::build))
      .def("search",
           [](const GalleryIndex& g, const Vector& q, std::size_t k) {
             std::vector<std::pair<std::string, double>> out;
             for (const auto& h : g.search(q, k)) out.emplace_back(h.video_id, h.score);
             return out;
           })
      .def("save", [](const GalleryIndex& g, const std::string& path) { g.save(path); })
      .def("__len__", &GalleryIndex::size);

  py::class_<Stage2Config>(m, "Stage2Config")
      .def(py::init<>())
      .def_readwrite("feature_channels", &Stage2Config::feature_channels)
      .def_readwrite("query_length", &Stage2Config::query_length)
      .def_readwrite("reference_length", &Stage2Config::reference_length)
      .def_readwrite("base_hidden", &Stage2Config::base_hidden)
      .def_readwrite("channels", &Stage2Config::channels)
      .def_readwrite("samples", &Stage2Config::samples)
      .def_readwrite("head_channels", &Stage2Config::head_channels)
      .def_readwrite("query_branch", &Stage2Config::query_branch);

  py::class_<Stage2Model>(m, "Stage2Model")
      .def(py::init<Stage2Config, std::uint64_t>(), py::arg("config"), py::arg("seed") = 0)
      .def(
          "forward",
          [](const Stage2Model& model, const Matrix& q, const Matrix& r) {
            const BMScoreMaps maps = model.forward(q, r);
            return py::make_tuple(maps.classification, maps.regression);
          },
          py::arg("query"), py::arg("reference"), "Returns (M_C, M_R).");
}
