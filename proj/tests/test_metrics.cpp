#include "svmr/error.hpp"
#include "svmr/metrics.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

using namespace svmr;

namespace {

// Brute-force AP: precision at every relevant rank, one pass per cut-off.
double oracle_ap(const std::vector<std::string>& ranking, const std::set<std::string>& rel, std::size_t k) {
  if (rel.empty()) return 0.0;
  double sum = 0;
  for (std::size_t i = 0; i < std::min(k, ranking.size()); ++i) {
    if (!rel.count(ranking[i])) continue;
    std::size_t hits = 0;
    for (std::size_t j = 0; j <= i; ++j) hits += rel.count(ranking[j]);
    sum += static_cast<double>(hits) / static_cast<double>(i + 1);
  }
  return sum / static_cast<double>(std::min(k, rel.size()));
}

double oracle_tiou(const Interval& a, const Interval& b) {
  // Measure on a fine grid of the union hull.
  const double lo = std::min(a.start, b.start), hi = std::max(a.end, b.end);
  const int n = 20000;
  double inter = 0, uni = 0;
  for (int i = 0; i < n; ++i) {
    const double x = lo + (hi - lo) * (i + 0.5) / n;
    const bool ia = x >= a.start && x < a.end, ib = x >= b.start && x < b.end;
    inter += ia && ib;
    uni += ia || ib;
  }
  return inter / uni;
}

// Maximum bipartite matching is an upper bound on the greedy count; for a
// single threshold the greedy count is checked against an explicit loop.
std::size_t oracle_greedy(const std::vector<Interval>& preds, const std::vector<Interval>& gt, double t) {
  std::vector<int> used(gt.size(), 0);
  std::size_t n = 0;
  for (const auto& p : preds) {
    int best = -1;
    double bv = -1;
    for (std::size_t g = 0; g < gt.size(); ++g) {
      if (used[g]) continue;
      const double inter = std::max(0.0, std::min(p.end, gt[g].end) - std::max(p.start, gt[g].start));
      const double v = inter / ((p.end - p.start) + (gt[g].end - gt[g].start) - inter);
      if (v >= t && v > bv) {
        bv = v;
        best = static_cast<int>(g);
      }
    }
    if (best >= 0) {
      used[static_cast<std::size_t>(best)] = 1;
      ++n;
    }
  }
  return n;
}

Interval random_interval(std::mt19937_64& rng, double span = 10.0) {
  std::uniform_real_distribution<double> u(0.0, span);
  const double a = u(rng), b = u(rng);
  return {std::min(a, b), std::max(a, b) + 0.05};
}

}  // namespace

TEST_CASE("tIoU examples") {
  CHECK(tiou({0, 2}, {0, 2}) == 1.0);
  CHECK(tiou({0, 1}, {2, 3}) == 0.0);
  CHECK(tiou({0, 2}, {1, 3}) == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(tiou({1, 1}, {0, 2}), Error);
  CHECK_THROWS_AS(tiou({0, 2}, {3, 1}), Error);
}

TEST_CASE("tIoU matches a sampled measure") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 100; ++i) {
    const Interval a = random_interval(rng), b = random_interval(rng);
    const double v = tiou(a, b);
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(v == doctest::Approx(tiou(b, a)));
    CHECK(std::abs(v - oracle_tiou(a, b)) < 2e-3);
  }
}

TEST_CASE("hit rate and mAP examples") {
  const std::vector<std::vector<std::string>> r{{"a", "b"}, {"c", "d"}};
  const std::vector<std::set<std::string>> rel{{"a"}, {"c"}};
  CHECK(hr_at_k(r, rel, 1).value == 1.0);
  CHECK(map_at_k(r, rel, 1).value == 1.0);
  const std::vector<std::set<std::string>> miss{{"a"}, {"z"}};
  CHECK(hr_at_k(r, miss, 2).value == 0.5);
  CHECK(average_precision_at_k({"x", "y", "z"}, {"a"}, 3) == 0.0);
  CHECK(average_precision_at_k({"a", "x", "b", "y", "z"}, {"a", "b"}, 5) == doctest::Approx(5.0 / 6.0));
  const auto ex = map_at_k(r, {{"a"}, {}}, 1);
  CHECK(ex.excluded == 1);
  CHECK(ex.evaluated == 1);
  CHECK_THROWS_AS(hr_at_k(r, rel, 0), Error);
  CHECK_THROWS_AS(map_at_k(r, rel, 0), Error);
}

TEST_CASE("AP matches the brute-force oracle") {
  std::mt19937_64 rng(2);
  for (int t = 0; t < 200; ++t) {
    std::vector<std::string> pool;
    for (int i = 0; i < 12; ++i) pool.push_back("v" + std::to_string(i));
    std::shuffle(pool.begin(), pool.end(), rng);
    const std::size_t n = 1 + rng() % 12;
    std::vector<std::string> ranking(pool.begin(), pool.begin() + static_cast<long>(n));
    std::set<std::string> rel;
    for (const auto& v : pool)
      if (rng() % 3 == 0) rel.insert(v);
    const std::size_t k = 1 + rng() % 12;
    const double ap = average_precision_at_k(ranking, rel, k);
    CHECK(ap == doctest::Approx(oracle_ap(ranking, rel, k)).epsilon(1e-12));
    CHECK(ap >= 0.0);
    CHECK(ap <= 1.0 + 1e-12);
  }
}

TEST_CASE("AR examples") {
  SUBCASE("single prediction at tIoU 0.75") {
    const LocalizationPair p{{{0.0, 3.0}}, {{0.0, 4.0}}};
    CHECK(tiou({0.0, 3.0}, {0.0, 4.0}) == 0.75);
    const ArCurve c = ar_at_an({p}, 1);
    CHECK(c.recall[0] == doctest::Approx(0.6));
  }
  SUBCASE("exact predictions saturate") {
    const LocalizationPair p{{{0, 1}, {2, 3}}, {{2, 3}, {0, 1}}};
    const ArCurve c = ar_at_an({p}, 100);
    CHECK(c.recall[0] == doctest::Approx(0.5));
    for (std::size_t i = 1; i < 100; ++i) CHECK(c.recall[i] == 1.0);
    CHECK(auc(c) > 98.0);
  }
  SUBCASE("disjoint predictions") {
    const ArCurve c = ar_at_an({{{{5, 6}}, {{0, 1}}}}, 100);
    CHECK(auc(c) == 0.0);
  }
  SUBCASE("pairs without ground truth are excluded") {
    const ArCurve c = ar_at_an({{{{0, 1}}, {}}, {{{0, 1}}, {{0, 1}}}}, 10);
    CHECK(c.excluded == 1);
    CHECK(c.pairs == 1);
    CHECK(c.recall[0] == 1.0);
  }
}

TEST_CASE("greedy matching matches the explicit loop") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 200; ++t) {
    std::vector<Interval> preds, gt;
    for (std::size_t i = 0, n = 1 + rng() % 10; i < n; ++i) preds.push_back(random_interval(rng));
    for (std::size_t i = 0, n = 1 + rng() % 5; i < n; ++i) gt.push_back(random_interval(rng));
    for (double th : kDefaultTiouThresholds) CHECK(greedy_matches(preds, gt, th) == oracle_greedy(preds, gt, th));
  }
}

TEST_CASE("AR is monotone in AN and in threshold") {
  std::mt19937_64 rng(4);
  for (int t = 0; t < 100; ++t) {
    std::vector<LocalizationPair> pairs(1 + rng() % 4);
    for (auto& p : pairs) {
      for (std::size_t i = 0, n = rng() % 30; i < n; ++i) p.predictions.push_back(random_interval(rng));
      for (std::size_t i = 0, n = 1 + rng() % 4; i < n; ++i) p.ground_truth.push_back(random_interval(rng));
    }
    const ArCurve c = ar_at_an(pairs, 40);
    CHECK(recall_monotonicity_check(c.recall));
    double prev = 2.0;
    for (double th : kDefaultTiouThresholds) {
      const double last = ar_at_an(pairs, 40, {th}).recall.back();
      CHECK(last <= prev + 1e-12);
      prev = last;
    }
    CHECK(auc(c) >= 0.0);
    CHECK(auc(c) <= 100.0);
  }
}

TEST_CASE("AUC of a constant curve") {
  ArCurve c;
  c.recall.assign(100, 0.5);
  CHECK(auc(c) == doctest::Approx(49.5));
}

TEST_CASE("monotonicity check") {
  CHECK(recall_monotonicity_check({0.1, 0.2, 0.2, 0.9}));
  CHECK_FALSE(recall_monotonicity_check({0.3, 0.2}));
}

TEST_CASE("precision examples") {
  using C = RankedClip;
  SUBCASE("exact distinct clips") {
    const auto r = prec_at_n({{C{"v", {0, 1}}, C{"v", {2, 3}}}}, {{C{"v", {2, 3}}, C{"v", {0, 1}}}}, 2);
    CHECK(r.value == 1.0);
  }
  SUBCASE("no overlap") {
    CHECK(prec_at_n({{C{"v", {0, 1}}}}, {{C{"v", {5, 6}}}}, 1).value == 0.0);
  }
  SUBCASE("threshold count") {
    // tIoU 0.6 with [0,5] and 0.4 with [10,15].
    CHECK(tiou({0, 3}, {0, 5}) == doctest::Approx(0.6));
    CHECK(tiou({10, 12}, {10, 15}) == doctest::Approx(0.4));
    const auto r = prec_at_n({{C{"v", {0, 3}}, C{"v", {10, 12}}}}, {{C{"v", {0, 5}}, C{"v", {10, 15}}}}, 2);
    CHECK(r.value == doctest::Approx(0.5));
  }
  SUBCASE("one ground truth credits once") {
    const auto r = prec_at_n({{C{"v", {0, 1}}, C{"v", {0, 1}}}}, {{C{"v", {0, 1}}}}, 2);
    CHECK(r.value == 0.5);
  }
  SUBCASE("video must match") {
    CHECK(prec_at_n({{C{"w", {0, 1}}}}, {{C{"v", {0, 1}}}}, 1).value == 0.0);
  }
  SUBCASE("short lists are flagged") {
    const auto r = prec_at_n({{C{"v", {0, 1}}}}, {{C{"v", {0, 1}}}}, 5);
    CHECK(r.short_lists == 1);
    CHECK(r.value == 1.0);
  }
  CHECK_THROWS_AS(prec_at_n({}, {}, 0), Error);
}
