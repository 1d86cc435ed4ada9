#include "helpers.hpp"

#include "svmr/adam.hpp"
#include "svmr/error.hpp"
#include "svmr/grad_check.hpp"
#include "svmr/grad_suite.hpp"
#include "svmr/ops.hpp"

#include <doctest.h>

#include <cmath>

using namespace svmr;
using namespace svmr::nn;
using testing::random_matrix;

namespace {

// Direct loop form of the concept-wise temporal convolution.
Tensor3 naive_ctc(const Tensor3& x, const Matrix& w, const Matrix& b, bool relu) {
  Tensor3 y(x.channels, x.length, w.rows());
  for (Index c = 0; c < x.channels; ++c)
    for (Index l = 0; l < x.length; ++l)
      for (Index fo = 0; fo < w.rows(); ++fo) {
        double s = b(fo, 0);
        for (Index fi = 0; fi < x.filters(); ++fi)
          for (Index k = 0; k < 3; ++k) {
            const Index src = l + k - 1;
            if (src >= 0 && src < x.length) s += w(fo, fi * 3 + k) * x.at(c, src, fi);
          }
        y.at(c, l, fo) = relu ? std::max(0.0, s) : s;
      }
  return y;
}

Matrix naive_conv2d(const Matrix& x, Index H, Index W, const Matrix& w, const Matrix& b) {
  Matrix y(w.rows(), H * W);
  for (Index co = 0; co < w.rows(); ++co)
    for (Index i = 0; i < H; ++i)
      for (Index j = 0; j < W; ++j) {
        double s = b(co, 0);
        for (Index ci = 0; ci < x.rows(); ++ci)
          for (Index ky = 0; ky < 3; ++ky)
            for (Index kx = 0; kx < 3; ++kx) {
              const Index yy = i + ky - 1, xx = j + kx - 1;
              if (yy >= 0 && yy < H && xx >= 0 && xx < W) s += w(co, ci * 9 + ky * 3 + kx) * x(ci, yy * W + xx);
            }
        y(co, i * W + j) = s;
      }
  return y;
}

}  // namespace

TEST_CASE("ctc identity kernel passes input through") {
  std::mt19937_64 rng(3);
  const Tensor3 x = Tensor3::from_matrix(random_matrix(5, 7, rng));
  Matrix w = Matrix::Zero(1, 3);
  w(0, 1) = 1.0;
  const Tensor3 y = ctc_forward(x, w, Matrix::Zero(1, 1), Activation::Linear);
  CHECK((y.data - x.data).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("ctc zero input and zero bias gives zero output") {
  std::mt19937_64 rng(4);
  const Tensor3 x(4, 6, 2);
  const Tensor3 y = ctc_forward(x, random_matrix(3, 6, rng), Matrix::Zero(3, 1), Activation::Relu);
  CHECK(y.data.isZero(0.0));
}

TEST_CASE("ctc matches loop form and keeps channels independent") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    Tensor3 x(4, 9, 2);
    x.data = random_matrix(36, 2, rng);
    const Matrix w = random_matrix(3, 6, rng), b = random_matrix(3, 1, rng);
    const Tensor3 y = ctc_forward(x, w, b, Activation::Relu);
    CHECK((y.data - naive_ctc(x, w, b, true).data).cwiseAbs().maxCoeff() < 1e-12);

    Tensor3 x2 = x;
    for (Index l = 0; l < 9; ++l) x2.at(2, l, 1) += 5.0;
    const Tensor3 y2 = ctc_forward(x2, w, b, Activation::Relu);
    for (Index c : {0, 1, 3})
      for (Index l = 0; l < 9; ++l)
        for (Index f = 0; f < 3; ++f) CHECK(y2.at(c, l, f) == y.at(c, l, f));
  }
}

TEST_CASE("ctc rejects a filter count mismatch") {
  const Tensor3 x(2, 5, 3);
  CHECK_THROWS_AS(ctc_forward(x, Matrix::Zero(2, 6), Matrix::Zero(2, 1), Activation::Linear), Error);
}

TEST_CASE("conv2d_3x3 matches loop form") {
  std::mt19937_64 rng(8);
  const Matrix x = random_matrix(3, 20, rng), w = random_matrix(2, 27, rng), b = random_matrix(2, 1, rng);
  CHECK((conv2d_3x3(x, 4, 5, w, b, Activation::Linear) - naive_conv2d(x, 4, 5, w, b)).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("average pooling windows") {
  Matrix x(1, 4);
  x << 1, 3, 5, 7;
  const Matrix y = avg_pool_temporal(x, 2);
  CHECK(y(0, 0) == doctest::Approx(2.0));
  CHECK(y(0, 1) == doctest::Approx(6.0));
  const Matrix all = avg_pool_temporal(x, 1);
  CHECK(all(0, 0) == doctest::Approx(4.0));
  CHECK_THROWS_AS(avg_pool_temporal(x, 5), Error);
}

TEST_CASE("pool_matrix columns sum to one over uneven windows") {
  for (Index L : {5, 7, 12, 100})
    for (Index T : {1, 3, 4}) {
      const Matrix P = pool_matrix(L, T);
      for (Index j = 0; j < T; ++j) CHECK(P.col(j).sum() == doctest::Approx(1.0));
      for (Index l = 0; l < L; ++l) CHECK((P.row(l).array() > 0).count() == 1);
    }
}

TEST_CASE("linear resize interpolates with aligned endpoints") {
  Matrix x(1, 2);
  x << 0, 2;
  const Matrix y = linear_resize(x, 4);
  REQUIRE(y.cols() == 4);
  CHECK(y(0, 0) == doctest::Approx(0.0));
  CHECK(y(0, 1) == doctest::Approx(2.0 / 3.0));
  CHECK(y(0, 2) == doctest::Approx(4.0 / 3.0));
  CHECK(y(0, 3) == doctest::Approx(2.0));
  std::mt19937_64 rng(1);
  const Matrix z = random_matrix(3, 6, rng);
  CHECK(linear_resize(z, 6) == z);
}

TEST_CASE("sigmoid is bounded and stable") {
  CHECK(sigmoid(0.0) == doctest::Approx(0.5));
  CHECK(sigmoid(800.0) == doctest::Approx(1.0));
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(std::isfinite(sigmoid(-800.0)));
}

TEST_CASE("grad_check validates eps") {
  ParamSet p;
  p.add("x", 1, 1)(0, 0) = 1.0;
  DifferentiableFn fn{[](const ParamSet& q) { return q.at("x")(0, 0) * q.at("x")(0, 0); },
                      [](const ParamSet& q) {
                        ParamSet g = q.zeros_like();
                        g.at("x")(0, 0) = 2.0 * q.at("x")(0, 0);
                        return g;
                      }};
  CHECK(grad_check(fn, p, 1e-5).max_rel_error < 1e-8);
  CHECK_THROWS_AS(grad_check(fn, p, 1e-2), Error);
  CHECK_THROWS_AS(grad_check(fn, p, 1e-8), Error);
}

TEST_CASE("grad_check detects a wrong gradient") {
  ParamSet p;
  p.add("x", 1, 1)(0, 0) = 1.5;
  DifferentiableFn fn{[](const ParamSet& q) { return std::sin(q.at("x")(0, 0)); },
                      [](const ParamSet& q) {
                        ParamSet g = q.zeros_like();
                        g.at("x")(0, 0) = std::sin(q.at("x")(0, 0));
                        return g;
                      }};
  const auto r = grad_check(fn, p, 1e-5);
  CHECK(r.max_rel_error > 0.5);
  CHECK(r.worst_block == "x");
}

TEST_CASE("gradient suite passes on ten seeds") {
  std::vector<std::uint64_t> seeds;
  for (std::uint64_t s = 0; s < 10; ++s) seeds.push_back(100 + s);
  for (const auto& e : run_grad_suite(seeds)) {
    INFO(e.name << " seed " << e.seed << " worst " << e.worst_block);
    CHECK(e.max_rel_error <= e.tolerance);
  }
}

TEST_CASE("adam reduces a quadratic") {
  ParamSet p;
  p.add("x", 2, 1) << 3.0, -2.0;
  Adam adam(p, {0.1});
  for (int i = 0; i < 300; ++i) {
    ParamSet g = p;
    g.at("x") *= 2.0;
    adam.step(p, g);
  }
  CHECK(p.at("x").norm() < 0.05);
  CHECK(adam.steps() == 300);
}

TEST_CASE("kaiming init is seeded and bounded") {
  Matrix a(4, 9), b(4, 9);
  std::mt19937_64 r1(5), r2(5);
  kaiming_uniform(a, 9, r1);
  kaiming_uniform(b, 9, r2);
  CHECK(a == b);
  CHECK(a.cwiseAbs().maxCoeff() <= std::sqrt(6.0 / 9.0));
}
