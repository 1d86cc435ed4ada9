#pragma once

// Wiring of both stages: gallery embedding, end-to-end querying and the
// evaluation report.

#include "svmr/benchmark.hpp"
#include "svmr/gallery.hpp"
#include "svmr/metrics.hpp"
#include "svmr/postprocess.hpp"
#include "svmr/stage1.hpp"
#include "svmr/stage2.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <utility>
#include <vector>

namespace svmr {

struct LocalizationEvalConfig {
  int max_pairs = 200;  // query x positive-reference pairs, subsampled when exceeded
  std::uint64_t seed = 0;
  double sigma = 0.4;
  std::size_t max_an = 100;
};

struct LocalizationEval {
  double auc = 0.0;
  ArCurve curve;
};

using ReferenceFilter = std::function<bool(const ReferenceVideo&)>;

/// Stage-2 AUC over positive (query, reference) pairs of `split`: the maps of
/// each pair are fused with p = 1, soft-NMS'd and scored against the
/// reference's instances of the query class.
LocalizationEval localization_auc(const Stage2Model& model, const Corpus& corpus, QuerySplit split,
                                  const LocalizationEvalConfig& config, const ReferenceFilter& filter = {});

GalleryIndex embed_gallery(const Stage1Model& model, const Corpus& corpus);

struct QueryConfig {
  std::size_t top_videos = 10;
  PostprocessConfig post;
};

/// Stage 1 retrieval of the top videos, stage 2 maps on each, then fusion,
/// soft-NMS and global ranking.
QueryResult run_query(const Stage1Model& stage1, const GalleryIndex& index, const Stage2Model& stage2,
                      const Corpus& corpus, const std::string& query_id, const FeatureSequence& query,
                      const QueryConfig& config);

std::vector<QueryResult> run_queries(const Stage1Model& stage1, const GalleryIndex& index, const Stage2Model& stage2,
                                     const Corpus& corpus, QuerySplit split, const QueryConfig& config);

/// Rebuilds query results from prediction and candidate files.
std::vector<QueryResult> read_results(const std::filesystem::path& predictions,
                                      const std::filesystem::path& candidates);

struct EvaluationReport {
  std::vector<std::pair<std::string, double>> metrics;
  ArCurve curve;

  double get(const std::string& name) const;
  /// `name = value` lines, values printed with six decimals.
  std::string to_text() const;
  /// "an,ar" header then one row per AN.
  std::string curve_csv() const;
};

/// HR@K / mAP@K from the candidate lists, AR@AN / AUC over (query, candidate)
/// pairs with ground truth, Prec@N over the global rankings.
EvaluationReport evaluate_results(const Corpus& corpus, const std::vector<QueryResult>& results,
                                  double tiou_tau = 0.5);

struct RetrievalReport {
  std::vector<std::pair<std::size_t, double>> hr;
  std::vector<std::pair<std::size_t, double>> map;
  std::size_t queries = 0;
  std::size_t excluded = 0;
};

RetrievalReport evaluate_retrieval(const Stage1Model& model, const GalleryIndex& index, const Corpus& corpus,
                                   QuerySplit split, const std::vector<std::size_t>& ks = {1, 5, 10});

}  // namespace svmr
