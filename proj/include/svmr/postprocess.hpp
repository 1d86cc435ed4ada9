#pragma once

#include "svmr/data_model.hpp"
#include "svmr/gallery.hpp"
#include "svmr/maps.hpp"

#include <cstddef>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

namespace svmr {

/// One prediction per valid cell, scored p * M_R * M_C, with cell (s, d)
/// mapped to [s / L * T, (s + d + 1) / L * T] seconds. Negative p is clamped
/// to 0; |p| > 1 is rejected.
std::vector<MomentPrediction> fuse_scores(double similarity, const BMScoreMaps& maps, double duration_sec,
                                          const std::string& video_id);

/// Gaussian soft-NMS: repeatedly emits the best remaining prediction and
/// multiplies every other score by exp(-tIoU^2 / sigma).
std::vector<MomentPrediction> soft_nms(std::vector<MomentPrediction> predictions, double sigma = 0.4,
                                       std::size_t top_k = std::numeric_limits<std::size_t>::max());

struct PostprocessConfig {
  double soft_nms_sigma = 0.4;
  std::size_t per_video_top_k = 100;
  double prune_threshold = 1e-4;
};

struct CandidateMaps {
  std::string video_id;
  double similarity = 0.0;
  double duration_sec = 0.0;
  BMScoreMaps maps;
};

struct VideoMoments {
  std::string video_id;
  double similarity = 0.0;
  std::vector<MomentPrediction> moments;  // after soft-NMS
};

struct QueryResult {
  std::string query_id;
  std::vector<VideoMoments> per_video;  // in candidate rank order
  std::vector<MomentPrediction> ranked;  // global ranking
};

/// Orders by score descending, then video id, then start time.
bool prediction_before(const MomentPrediction& a, const MomentPrediction& b);

QueryResult assemble_results(const std::string& query_id, const std::vector<CandidateMaps>& candidates,
                             const PostprocessConfig& config = {});

/// JSON lines {query_id, video_id, t_start, t_end, score}, per query sorted by
/// score descending.
void write_predictions(const std::vector<QueryResult>& results, const std::filesystem::path& path);
std::string format_predictions(const std::vector<QueryResult>& results);

struct PredictionRecord {
  std::string query_id;
  MomentPrediction prediction;
};
std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path);

/// JSON lines {query_id, rank, video_id, similarity} for the stage-1 shortlist.
std::string format_candidates(const std::vector<QueryResult>& results);

}  // namespace svmr
