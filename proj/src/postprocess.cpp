#include "svmr/postprocess.hpp"

#include "svmr/error.hpp"
#include "svmr/metrics.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>

namespace svmr {

std::vector<MomentPrediction> fuse_scores(double similarity, const BMScoreMaps& maps, double duration_sec,
                                          const std::string& video_id) {
  if (!(std::abs(similarity) <= 1.0 + 1e-9)) data_error("fuse_scores: similarity outside [-1, 1]");
  if (!(duration_sec > 0)) data_error("fuse_scores: duration must be positive");
  const double p = std::clamp(similarity, 0.0, 1.0);
  const Index L = maps.length();
  std::vector<MomentPrediction> out;
  out.reserve(static_cast<std::size_t>(L * (L + 1) / 2));
  for (Index s = 0; s < L; ++s)
    for (Index d = 0; s + d + 1 <= L; ++d) {
      const double t0 = static_cast<double>(s) / static_cast<double>(L) * duration_sec;
      const double t1 = static_cast<double>(s + d + 1) / static_cast<double>(L) * duration_sec;
      out.push_back({video_id, t0, t1, p * maps.regression(s, d) * maps.classification(s, d)});
    }
  return out;
}

bool prediction_before(const MomentPrediction& a, const MomentPrediction& b) {
  if (a.score != b.score) return a.score > b.score;
  if (a.video_id != b.video_id) return a.video_id < b.video_id;
  if (a.t_start != b.t_start) return a.t_start < b.t_start;
  return a.t_end < b.t_end;
}

std::vector<MomentPrediction> soft_nms(std::vector<MomentPrediction> predictions, double sigma, std::size_t top_k) {
  if (!(sigma > 0)) data_error("soft_nms: sigma must be > 0");
  std::vector<MomentPrediction> kept;
  kept.reserve(std::min(top_k, predictions.size()));
  while (!predictions.empty() && kept.size() < top_k) {
    const auto best = std::min_element(predictions.begin(), predictions.end(), prediction_before);
    const MomentPrediction top = *best;
    *best = predictions.back();
    predictions.pop_back();
    const Interval ti{top.t_start, top.t_end};
    for (auto& p : predictions) {
      const double iou = tiou(ti, {p.t_start, p.t_end});
      if (iou > 0.0) p.score *= std::exp(-iou * iou / sigma);
    }
    kept.push_back(top);
  }
  return kept;
}

QueryResult assemble_results(const std::string& query_id, const std::vector<CandidateMaps>& candidates,
                             const PostprocessConfig& config) {
  QueryResult result;
  result.query_id = query_id;
  for (const auto& c : candidates) {
    auto fused = fuse_scores(c.similarity, c.maps, c.duration_sec, c.video_id);
    std::erase_if(fused, [&](const auto& p) { return p.score < config.prune_threshold; });
    VideoMoments vm{c.video_id, c.similarity, soft_nms(std::move(fused), config.soft_nms_sigma, config.per_video_top_k)};
    result.ranked.insert(result.ranked.end(), vm.moments.begin(), vm.moments.end());
    result.per_video.push_back(std::move(vm));
  }
  std::sort(result.ranked.begin(), result.ranked.end(), prediction_before);
  return result;
}

std::string format_predictions(const std::vector<QueryResult>& results) {
  std::string out;
  for (const auto& r : results)
    for (const auto& p : r.ranked) {
      nlohmann::ordered_json j;
      j["query_id"] = r.query_id;
      j["video_id"] = p.video_id;
      j["t_start"] = p.t_start;
      j["t_end"] = p.t_end;
      j["score"] = p.score;
      out += j.dump() + "\n";
    }
  return out;
}

void write_predictions(const std::vector<QueryResult>& results, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) data_error("cannot write predictions to " + path.string());
  out << format_predictions(results);
}

std::vector<PredictionRecord> read_predictions(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) data_error("cannot open predictions file " + path.string());
  std::vector<PredictionRecord> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      PredictionRecord r;
      r.query_id = j.at("query_id").get<std::string>();
      r.prediction = {j.at("video_id").get<std::string>(), j.at("t_start").get<double>(), j.at("t_end").get<double>(),
                      j.at("score").get<double>()};
      if (!(r.prediction.t_start < r.prediction.t_end)) data_error("prediction with t_start >= t_end");
      out.push_back(std::move(r));
    } catch (const nlohmann::json::exception& e) {
      data_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::string format_candidates(const std::vector<QueryResult>& results) {
  std::string out;
  for (const auto& r : results)
    for (std::size_t i = 0; i < r.per_video.size(); ++i) {
      nlohmann::ordered_json j;
      j["query_id"] = r.query_id;
      j["rank"] = i + 1;
      j["video_id"] = r.per_video[i].video_id;
      j["similarity"] = r.per_video[i].similarity;
      out += j.dump() + "\n";
    }
  return out;
}

}  // namespace svmr
