#include "helpers.hpp"

#include "svmr/error.hpp"
#include "svmr/ops.hpp"
#include "svmr/stage2.hpp"

#include <doctest.h>

#include <cmath>

using namespace svmr;
using testing::random_matrix;

namespace {

Stage2Config small_config() {
  Stage2Config c;
  c.feature_channels = 5;
  c.query_length = 4;
  c.reference_length = 6;
  c.base_hidden = 6;
  c.channels = 4;
  c.samples = 4;
  c.head_channels = 4;
  return c;
}

// Per-cell interpolation written directly from the sampling rule.
double oracle_sample(const Matrix& f, Index c, Index s, Index d, Index n, Index N) {
  const Index L = f.cols();
  if (s + d + 1 > L) return 0.0;
  const double pos = s + static_cast<double>(n) * static_cast<double>(d) / static_cast<double>(N - 1);
  const Index i = static_cast<Index>(pos);
  if (i >= L - 1) return f(c, L - 1);
  const double t = pos - static_cast<double>(i);
  return f(c, i) * (1.0 - t) + f(c, i + 1) * t;
}

void zero_params(Stage2Model& m) {
  for (auto& [name, w] : m.params().entries()) w.setZero();
}

}  // namespace

TEST_CASE("valid cell count and mask") {
  CHECK(bm_mask(4).sum() == 10.0);
  CHECK(bm_mask(100).sum() == 5050.0);
  CHECK(bm_valid(0, 3, 4));
  CHECK_FALSE(bm_valid(1, 3, 4));
}

TEST_CASE("bm_sample of a constant is constant on valid cells") {
  const Matrix f = Matrix::Constant(3, 5, 2.5);
  const BMFeatureMap m = bm_sample(f, 4);
  for (Index s = 0; s < 5; ++s)
    for (Index d = 0; d < 5; ++d)
      for (Index c = 0; c < 3; ++c)
        for (Index n = 0; n < 4; ++n) CHECK(m.at(c, n, s, d) == (bm_valid(s, d, 5) ? 2.5 : 0.0));
  CHECK_THROWS_AS(bm_sample(f, 1), Error);
}

TEST_CASE("bm_sample equals the per-cell oracle") {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    const Index L = 2 + static_cast<Index>(seed % 11), N = 2 + static_cast<Index>(seed % 5);
    const Matrix f = random_matrix(3, L, rng);
    const BMFeatureMap m = bm_sample(f, N);
    double worst = 0;
    for (Index c = 0; c < 3; ++c)
      for (Index n = 0; n < N; ++n)
        for (Index s = 0; s < L; ++s)
          for (Index d = 0; d < L; ++d) worst = std::max(worst, std::abs(m.at(c, n, s, d) - oracle_sample(f, c, s, d, n, N)));
    CHECK(worst <= 1e-6);
  }
}

TEST_CASE("bm_sample_backward is the adjoint") {
  std::mt19937_64 rng(4);
  const Matrix f = random_matrix(3, 7, rng);
  const BMFeatureMap m = bm_sample(f, 5);
  const Matrix g = random_matrix(m.data.rows(), m.data.cols(), rng);
  const Matrix back = bm_sample_backward({3, 5, 7, g}, 7);
  CHECK((m.data.array() * g.array()).sum() == doctest::Approx((f.array() * back.array()).sum()));
}

TEST_CASE("base module shapes and zero behaviour") {
  Stage2Config c;
  c.feature_channels = 8;
  Stage2Model m(c, 1);
  std::mt19937_64 rng(1);
  const auto out = m.base_module(random_matrix(8, 4, rng), random_matrix(8, 100, rng));
  CHECK(out.query.size() == 128);
  CHECK(out.reference.rows() == 128);
  CHECK(out.reference.cols() == 100);
  CHECK_THROWS_AS(m.base_module(random_matrix(7, 4, rng), random_matrix(8, 100, rng)), Error);

  Stage2Model z(small_config(), 2);
  for (auto& [name, w] : z.params().entries())
    if (name.back() == 'b') w.setZero();
  const auto zo = z.base_module(Matrix::Zero(5, 4), Matrix::Zero(5, 6));
  CHECK(zo.query.isZero(0.0));
  CHECK(zo.reference.isZero(0.0));
}

TEST_CASE("constant query pools to the per-channel transform of the constant") {
  Stage2Model m(small_config(), 3);
  // Centre-tap-only kernels make the transform independent of zero padding.
  Matrix centre[2];
  int i = 0;
  for (const char* name : {"base.conv0.w", "base.conv1.w"}) {
    Matrix& w = m.params().at(name);
    for (Index c = 0; c < w.cols(); ++c)
      if (c % 3 != 1) w.col(c).setZero();
    centre[i] = Matrix(w.rows(), w.cols() / 3);
    for (Index c = 0; c < centre[i].cols(); ++c) centre[i].col(c) = w.col(c * 3 + 1);
    ++i;
  }
  std::mt19937_64 rng(3);
  m.params().at("base.conv0.b") = random_matrix(6, 1, rng);
  m.params().at("base.conv1.b") = random_matrix(4, 1, rng);
  Vector v(5);
  v << 0.3, -1.0, 2.0, 0.5, 1.5;
  const Vector h = (centre[0] * v + m.params().at("base.conv0.b")).cwiseMax(0.0);
  const Vector expect = (centre[1] * h + m.params().at("base.conv1.b")).cwiseMax(0.0);
  const auto out = m.base_module(v.replicate(1, 4), random_matrix(5, 6, rng));
  CHECK((out.query - expect).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("attention hand example") {
  // C = 2, N = 2, l_r = 2; the downsampling keeps sample 0 of each channel.
  Stage2Config c = small_config();
  c.channels = 2;
  c.samples = 2;
  c.reference_length = 2;
  Stage2Model m(c, 1);
  Matrix& w = m.params().at("rlm.down.w");
  w.setZero();
  w(0, 0) = 1.0;  // row c * N + n = 0 -> channel 0, sample 0
  w(1, 2) = 1.0;  // channel 1, sample 0
  m.params().at("rlm.down.b").setZero();

  BMFeatureMap map{2, 2, 2, Matrix::Zero(4, 4)};
  // Columns s * L + d: (0,0), (0,1), (1,0) valid; (1,1) invalid.
  map.data << 1.0, 2.0, 0.5, 0.0,  //
      3.0, 1.0, 1.0, 0.0,          //
      -1.0, 0.5, 2.0, 0.0,         //
      0.0, 4.0, 1.0, 0.0;
  Vector fc(2);
  fc << 0.5, -0.25;
  const auto out = m.relocalization_attention(fc, map);
  auto sig = [](double z) { return 1.0 / (1.0 + std::exp(-z)); };
  const double att[3] = {sig(0.5 * 1.0 - 0.25 * -1.0), sig(0.5 * 2.0 - 0.25 * 0.5), sig(0.5 * 0.5 - 0.25 * 2.0)};
  for (Index j = 0; j < 3; ++j) {
    CHECK(out.attention[j] == doctest::Approx(att[j]).epsilon(1e-9));
    for (Index r = 0; r < 4; ++r) {
      const double expect = map.data(r, j) * att[j] * fc[r / 2];
      CHECK(std::abs(out.fused(r, j) - expect) <= 1e-6);
    }
  }
  for (Index r = 0; r < 4; ++r) CHECK(out.fused(r, 3) == 0.0);
}

TEST_CASE("zero query gives half attention and a zero fused map") {
  Stage2Model m(small_config(), 5);
  std::mt19937_64 rng(5);
  const BMFeatureMap map = bm_sample(random_matrix(4, 6, rng), 4);
  m.params().at("rlm.down.b").setZero();
  const auto out = m.relocalization_attention(Vector::Zero(4), map);
  CHECK((out.attention.array() - 0.5).abs().maxCoeff() == 0.0);
  CHECK(out.fused.isZero(0.0));
}

TEST_CASE("saturated attention passes the map through") {
  Stage2Config c = small_config();
  Stage2Model m(c, 5);
  m.params().at("rlm.down.w").setZero();
  m.params().at("rlm.down.b").setConstant(100.0);
  std::mt19937_64 rng(5);
  const BMFeatureMap map = bm_sample(random_matrix(4, 6, rng), 4);
  const auto out = m.relocalization_attention(Vector::Ones(4), map);
  CHECK((out.fused - map.data).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("predict_maps with zero weights is one half on valid cells") {
  Stage2Model m(small_config(), 6);
  zero_params(m);
  const auto maps = m.predict_maps(Matrix::Zero(16, 36));
  const Matrix mask = bm_mask(6);
  CHECK((maps.classification - 0.5 * mask).cwiseAbs().maxCoeff() == 0.0);
  CHECK((maps.regression - 0.5 * mask).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("forward maps are bounded and masked") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Stage2Model m(small_config(), seed);
    std::mt19937_64 rng(seed);
    const auto maps = m.forward(random_matrix(5, 4, rng), random_matrix(5, 6, rng));
    CHECK(maps.classification.minCoeff() >= 0.0);
    CHECK(maps.classification.maxCoeff() <= 1.0);
    for (Index s = 0; s < 6; ++s)
      for (Index d = 0; d < 6; ++d)
        if (!bm_valid(s, d, 6)) {
          CHECK(maps.classification(s, d) == 0.0);
          CHECK(maps.regression(s, d) == 0.0);
        }
  }
}

TEST_CASE("label map examples") {
  CHECK(gt_label_map({}, 4).iou.isZero(0.0));
  const LabelMap g = gt_label_map({{0.0, 2.0}}, 4);
  CHECK(g.iou(0, 1) == doctest::Approx(1.0));
  CHECK(g.iou(0, 3) == doctest::Approx(0.5));
  CHECK(g.iou(3, 1) == 0.0);  // invalid
  const LabelMap a = gt_label_map({{0.5, 2.0}, {2.5, 4.0}}, 4), b = gt_label_map({{2.5, 4.0}, {0.5, 2.0}}, 4);
  CHECK(a.iou == b.iou);
  CHECK(a.iou.maxCoeff() <= 1.0);
  CHECK(a.iou.minCoeff() >= 0.0);
}

TEST_CASE("instances convert to grid units") {
  AnnotatedVideo v;
  v.features = {"v", 50.0, Matrix::Zero(1, 50)};
  v.instances = {{1, 10.0, 20.0}, {2, 30.0, 40.0}};
  const auto g = instances_to_grid(v, 1, 100);
  REQUIRE(g.size() == 1);
  CHECK(g[0].first == doctest::Approx(20.0));
  CHECK(g[0].second == doctest::Approx(40.0));
}

TEST_CASE("rlm loss examples") {
  const Stage2Config c = small_config();
  SUBCASE("logistic term at p = 0.5 is ln 2") {
    LabelMap g{Matrix::Zero(1, 1)};
    g.iou(0, 0) = 1.0;
    BMScoreMaps m{Matrix::Constant(1, 1, 0.5), Matrix::Constant(1, 1, 1.0)};
    const auto l = rlm_loss(m, g, c);
    CHECK(l.classification == doctest::Approx(std::log(2.0)).epsilon(1e-9));
    CHECK(l.regression == doctest::Approx(0.0));
  }
  SUBCASE("perfect maps give zero loss") {
    const LabelMap g = gt_label_map({{1.0, 3.0}}, 6);
    BMScoreMaps m;
    m.regression = g.iou;
    m.classification = Matrix::Zero(6, 6);
    for (Index s = 0; s < 6; ++s)
      for (Index d = 0; s + d + 1 <= 6; ++d) m.classification(s, d) = g.iou(s, d) > 0.6 ? 1.0 : 0.0;
    const auto l = rlm_loss(m, g, c);
    CHECK(l.regression == 0.0);
    CHECK(std::abs(l.classification) < 1e-5);
    CHECK(l.total == doctest::Approx(l.classification + 10.0 * l.regression));
  }
  SUBCASE("shape mismatch") {
    BMScoreMaps m{Matrix::Zero(3, 3), Matrix::Zero(3, 3)};
    CHECK_THROWS_AS(rlm_loss(m, gt_label_map({}, 4), c), Error);
  }
}

TEST_CASE("one small step decreases a frozen batch loss") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Stage2Model m(small_config(), seed);
    std::mt19937_64 rng(seed);
    std::vector<Stage2Sample> batch;
    for (int i = 0; i < 4; ++i)
      batch.push_back({random_matrix(5, 4, rng), random_matrix(5, 6, rng), gt_label_map({{1.0 + i * 0.5, 4.0}}, 6)});
    ParamSet g = m.params().zeros_like();
    double before = 0;
    for (const auto& s : batch) before += m.loss_and_grad(s, g, 0.25).total / 4;
    m.params().axpy(-1e-3, g);
    double after = 0;
    for (const auto& s : batch) after += m.loss(s).total / 4;
    CHECK(after < before);
  }
}

TEST_CASE("query branch disabled ignores the query") {
  Stage2Config c = small_config();
  c.query_branch = false;
  Stage2Model m(c, 2);
  std::mt19937_64 rng(2);
  const Matrix r = random_matrix(5, 6, rng);
  const auto a = m.forward(random_matrix(5, 4, rng), r), b = m.forward(random_matrix(5, 4, rng), r);
  CHECK(a.classification == b.classification);
}

TEST_CASE("config round trip") {
  KeyValueConfig kv;
  Stage2Config c = small_config();
  c.query_branch = false;
  c.write(kv);
  const Stage2Config back = Stage2Config::read(kv);
  CHECK(back.samples == 4);
  CHECK_FALSE(back.query_branch);
  kv.set("stage2.samples", "1");
  CHECK_THROWS_AS(Stage2Config::read(kv), Error);
}
