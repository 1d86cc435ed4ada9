#pragma once

// Retrieval and localization metrics: tIoU, HR@K, mAP@K, AR@AN, AUC, Prec@N.

#include <cstddef>
#include <set>
#include <string>
#include <vector>

namespace svmr {

struct Interval {
  double start = 0.0;
  double end = 0.0;
};

/// |a n b| / |a u b|. Throws on an empty interval.
double tiou(const Interval& a, const Interval& b);

struct RankingMetric {
  double value = 0.0;
  std::size_t evaluated = 0;
  std::size_t excluded = 0;  // queries with no relevant video
};

/// Fraction of queries with a relevant video in the top K.
RankingMetric hr_at_k(const std::vector<std::vector<std::string>>& rankings,
                      const std::vector<std::set<std::string>>& relevant, std::size_t k);
/// sum_{i <= K} Prec(i) rel(i) / min(K, R_q).
double average_precision_at_k(const std::vector<std::string>& ranking, const std::set<std::string>& relevant,
                              std::size_t k);
RankingMetric map_at_k(const std::vector<std::vector<std::string>>& rankings,
                       const std::vector<std::set<std::string>>& relevant, std::size_t k);

/// Ranked predictions and ground truth of one query-video pair.
struct LocalizationPair {
  std::vector<Interval> predictions;
  std::vector<Interval> ground_truth;
};

inline const std::vector<double> kDefaultTiouThresholds{0.5, 0.6, 0.7, 0.8, 0.9};

struct ArCurve {
  std::vector<double> recall;  // recall[i] = AR at AN = i + 1
  std::vector<double> thresholds;
  std::size_t pairs = 0;
  std::size_t excluded = 0;  // pairs without ground truth
};

/// Matched ground truth count of a greedy one-to-one matching: each
/// prediction, in rank order, takes the unmatched ground truth with the
/// highest tIoU >= threshold.
std::size_t greedy_matches(const std::vector<Interval>& predictions, const std::vector<Interval>& ground_truth,
                           double threshold);

ArCurve ar_at_an(const std::vector<LocalizationPair>& pairs, std::size_t max_an = 100,
                 const std::vector<double>& thresholds = kDefaultTiouThresholds);
/// Trapezoidal area of AR over AN in [1, max_an], divided by max_an, x100.
double auc(const ArCurve& curve);

bool recall_monotonicity_check(const std::vector<double>& curve);

struct RankedClip {
  std::string video_id;
  Interval interval;
};

struct PrecisionResult {
  double value = 0.0;
  std::size_t queries = 0;
  std::size_t short_lists = 0;  // queries with fewer than N clips
};

/// Per query: fraction of its top-N clips matching a distinct same-class
/// ground truth clip (same video, tIoU >= tau); averaged over queries.
PrecisionResult prec_at_n(const std::vector<std::vector<RankedClip>>& ranked,
                          const std::vector<std::vector<RankedClip>>& ground_truth, std::size_t n, double tau = 0.5);

}  // namespace svmr
