#include "svmr/metrics.hpp"

#include "svmr/error.hpp"

#include <algorithm>
#include <cmath>

namespace svmr {

double tiou(const Interval& a, const Interval& b) {
  if (!(a.end > a.start) || !(b.end > b.start)) data_error("tiou: empty interval");
  const double inter = std::max(0.0, std::min(a.end, b.end) - std::max(a.start, b.start));
  const double uni = (a.end - a.start) + (b.end - b.start) - inter;
  return inter / uni;
}

RankingMetric hr_at_k(const std::vector<std::vector<std::string>>& rankings,
                      const std::vector<std::set<std::string>>& relevant, std::size_t k) {
  if (k == 0) data_error("hr_at_k: K must be >= 1");
  if (rankings.size() != relevant.size()) data_error("hr_at_k: rankings and relevance differ in length");
  RankingMetric m;
  double hits = 0.0;
  for (std::size_t q = 0; q < rankings.size(); ++q) {
    if (relevant[q].empty()) {
      ++m.excluded;
      continue;
    }
    ++m.evaluated;
    const auto& r = rankings[q];
    const std::size_t top = std::min(k, r.size());
    if (std::any_of(r.begin(), r.begin() + static_cast<long>(top), [&](const auto& v) { return relevant[q].count(v); }))
      hits += 1.0;
  }
  m.value = m.evaluated ? hits / static_cast<double>(m.evaluated) : 0.0;
  return m;
}

double average_precision_at_k(const std::vector<std::string>& ranking, const std::set<std::string>& relevant,
                              std::size_t k) {
  if (k == 0) data_error("average_precision_at_k: K must be >= 1");
  if (relevant.empty()) return 0.0;
  double hits = 0.0, sum = 0.0;
  const std::size_t top = std::min(k, ranking.size());
  for (std::size_t i = 0; i < top; ++i)
    if (relevant.count(ranking[i])) {
      hits += 1.0;
      sum += hits / static_cast<double>(i + 1);
    }
  return sum / static_cast<double>(std::min(k, relevant.size()));
}

RankingMetric map_at_k(const std::vector<std::vector<std::string>>& rankings,
                       const std::vector<std::set<std::string>>& relevant, std::size_t k) {
  if (k == 0) data_error("map_at_k: K must be >= 1");
  if (rankings.size() != relevant.size()) data_error("map_at_k: rankings and relevance differ in length");
  RankingMetric m;
  double sum = 0.0;
  for (std::size_t q = 0; q < rankings.size(); ++q) {
    if (relevant[q].empty()) {
      ++m.excluded;
      continue;
    }
    ++m.evaluated;
    sum += average_precision_at_k(rankings[q], relevant[q], k);
  }
  m.value = m.evaluated ? sum / static_cast<double>(m.evaluated) : 0.0;
  return m;
}

namespace {

// Greedy matcher that consumes predictions one at a time.
class GreedyMatcher {
 public:
  GreedyMatcher(const std::vector<Interval>& gt, double threshold)
      : gt_(gt), used_(gt.size(), false), threshold_(threshold) {}

  void add(const Interval& pred) {
    double best = -1.0;
    std::size_t best_i = gt_.size();
    for (std::size_t i = 0; i < gt_.size(); ++i) {
      if (used_[i]) continue;
      const double v = tiou(pred, gt_[i]);
      if (v >= threshold_ && v > best) {
        best = v;
        best_i = i;
      }
    }
    if (best_i < gt_.size()) {
      used_[best_i] = true;
      ++matched_;
    }
  }
  std::size_t matched() const { return matched_; }

 private:
  const std::vector<Interval>& gt_;
  std::vector<bool> used_;
  double threshold_;
  std::size_t matched_ = 0;
};

}  // namespace

std::size_t greedy_matches(const std::vector<Interval>& predictions, const std::vector<Interval>& ground_truth,
                           double threshold) {
  GreedyMatcher m(ground_truth, threshold);
  for (const auto& p : predictions) m.add(p);
  return m.matched();
}

ArCurve ar_at_an(const std::vector<LocalizationPair>& pairs, std::size_t max_an, const std::vector<double>& thresholds) {
  if (max_an == 0) data_error("ar_at_an: AN grid must be non-empty");
  if (thresholds.empty()) data_error("ar_at_an: no tIoU thresholds");
  ArCurve curve;
  curve.thresholds = thresholds;
  curve.recall.assign(max_an, 0.0);
  for (const auto& pair : pairs) {
    if (pair.ground_truth.empty()) {
      ++curve.excluded;
      continue;
    }
    ++curve.pairs;
    const double denom = static_cast<double>(pair.ground_truth.size()) * static_cast<double>(thresholds.size());
    for (double t : thresholds) {
      GreedyMatcher m(pair.ground_truth, t);
      for (std::size_t an = 0; an < max_an; ++an) {
        if (an < pair.predictions.size()) m.add(pair.predictions[an]);
        curve.recall[an] += static_cast<double>(m.matched()) / denom;
      }
    }
  }
  if (curve.pairs > 0)
    for (auto& r : curve.recall) r /= static_cast<double>(curve.pairs);
  return curve;
}

double auc(const ArCurve& curve) {
  const auto& r = curve.recall;
  if (r.empty()) return 0.0;
  double area = 0.0;
  for (std::size_t i = 1; i < r.size(); ++i) area += 0.5 * (r[i - 1] + r[i]);
  return 100.0 * area / static_cast<double>(r.size());
}

bool recall_monotonicity_check(const std::vector<double>& curve) {
  for (std::size_t i = 1; i < curve.size(); ++i)
    if (curve[i] < curve[i - 1]) return false;
  return true;
}

PrecisionResult prec_at_n(const std::vector<std::vector<RankedClip>>& ranked,
                          const std::vector<std::vector<RankedClip>>& ground_truth, std::size_t n, double tau) {
  if (n == 0) data_error("prec_at_n: N must be >= 1");
  if (ranked.size() != ground_truth.size()) data_error("prec_at_n: ranked clips and ground truth differ in length");
  PrecisionResult res;
  double sum = 0.0;
  for (std::size_t q = 0; q < ranked.size(); ++q) {
    const auto& clips = ranked[q];
    const auto& gts = ground_truth[q];
    const std::size_t top = std::min(n, clips.size());
    if (top < n) ++res.short_lists;
    ++res.queries;
    if (top == 0) continue;
    std::vector<bool> used(gts.size(), false);
    std::size_t hits = 0;
    for (std::size_t i = 0; i < top; ++i) {
      double best = -1.0;
      std::size_t best_g = gts.size();
      for (std::size_t g = 0; g < gts.size(); ++g) {
        if (used[g] || gts[g].video_id != clips[i].video_id) continue;
        const double v = tiou(clips[i].interval, gts[g].interval);
        if (v >= tau && v > best) {
          best = v;
          best_g = g;
        }
      }
      if (best_g < gts.size()) {
        used[best_g] = true;
        ++hits;
      }
    }
    sum += static_cast<double>(hits) / static_cast<double>(top);
  }
  res.value = res.queries ? sum / static_cast<double>(res.queries) : 0.0;
  return res;
}

}  // namespace svmr
