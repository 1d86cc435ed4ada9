#include "svmr/grad_suite.hpp"

#include "svmr/grad_check.hpp"
#include "svmr/ops.hpp"
#include "svmr/stage1.hpp"
#include "svmr/stage2.hpp"

#include <functional>
#include <random>

namespace svmr::nn {

namespace {

constexpr double kLinearTol = 1e-4;
constexpr double kTol = 1e-3;
constexpr double kEps = 1e-5;

Matrix random_matrix(Index rows, Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

// Contracts an op output against a fixed random direction so the check
// covers the whole Jacobian.
double contract(const Matrix& y, const Matrix& dir) { return (y.array() * dir.array()).sum(); }

using Forward = std::function<Matrix(const ParamSet&)>;
using Backward = std::function<ParamSet(const ParamSet&, const Matrix& dy)>;

GradSuiteEntry check_op(const std::string& name, std::uint64_t seed, double tol, const ParamSet& point,
                        const Forward& fwd, const Backward& bwd, std::mt19937_64& rng) {
  const Matrix y0 = fwd(point);
  const Matrix dir = random_matrix(y0.rows(), y0.cols(), rng);
  DifferentiableFn fn{[&](const ParamSet& p) { return contract(fwd(p), dir); },
                      [&](const ParamSet& p) { return bwd(p, dir); }};
  const auto r = grad_check(fn, point, kEps);
  return {name, seed, r.max_rel_error, tol, r.worst_block, static_cast<long long>(r.checked)};
}

ParamSet xwb(Index xr, Index xc, Index wr, Index wc, std::mt19937_64& rng) {
  ParamSet p;
  p.add("x", xr, xc) = random_matrix(xr, xc, rng);
  p.add("w", wr, wc) = random_matrix(wr, wc, rng, 0.5);
  p.add("b", wr, 1) = random_matrix(wr, 1, rng, 0.1);
  return p;
}

// Zero-initialised biases put ReLU units whose inputs are all zero exactly on
// the kink; checks are taken at a generic point instead.
void jitter_biases(ParamSet& p, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 0.1);
  for (auto& [name, m] : p.entries())
    if (name.size() > 2 && name.compare(name.size() - 2, 2, ".b") == 0)
      for (Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
}

// Structured inits give many units identical pre-activations; spread weights too.
void jitter_weights(ParamSet& p, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 0.1);
  for (auto& [name, m] : p.entries())
    if (name.size() > 2 && name.compare(name.size() - 2, 2, ".w") == 0)
      for (Index i = 0; i < m.size(); ++i) m.data()[i] += n(rng);
}

}  // namespace

std::vector<GradSuiteEntry> run_grad_suite(const std::vector<std::uint64_t>& seeds) {
  std::vector<GradSuiteEntry> out;
  for (std::uint64_t seed : seeds) {
    std::mt19937_64 rng(seed);

    for (Activation act : {Activation::Linear, Activation::Relu}) {
      const Index C = 8, L = 12, Fi = 3, Fo = 4;
      ParamSet p;
      p.add("x", C * L, Fi) = random_matrix(C * L, Fi, rng);
      p.add("w", Fo, 3 * Fi) = random_matrix(Fo, 3 * Fi, rng, 0.5);
      p.add("b", Fo, 1) = random_matrix(Fo, 1, rng, 0.1);
      auto as_tensor = [&](const ParamSet& q) {
        Tensor3 t(C, L, Fi);
        t.data = q.at("x");
        return t;
      };
      out.push_back(check_op(
          act == Activation::Linear ? "ctc_linear" : "ctc_relu", seed, act == Activation::Linear ? kLinearTol : kTol,
          p, [&](const ParamSet& q) { return ctc_forward(as_tensor(q), q.at("w"), q.at("b"), act).data; },
          [&](const ParamSet& q, const Matrix& dy) {
            const Tensor3 x = as_tensor(q);
            const Tensor3 y = ctc_forward(x, q.at("w"), q.at("b"), act);
            Tensor3 g(C, L, Fo);
            g.data = dy;
            ParamSet grad = q.zeros_like();
            grad.at("x") = ctc_backward(x, y, g, q.at("w"), act, grad.at("w"), grad.at("b")).data;
            return grad;
          },
          rng));
    }

    for (Activation act : {Activation::Linear, Activation::Relu}) {
      const Index Ci = 6, Co = 5, L = 12;
      const ParamSet p = xwb(Ci, L, Co, 3 * Ci, rng);
      out.push_back(check_op(
          act == Activation::Linear ? "temporal_conv1d_linear" : "temporal_conv1d_relu", seed,
          act == Activation::Linear ? kLinearTol : kTol, p,
          [&](const ParamSet& q) { return temporal_conv1d(q.at("x"), q.at("w"), q.at("b"), act); },
          [&](const ParamSet& q, const Matrix& dy) {
            const Matrix y = temporal_conv1d(q.at("x"), q.at("w"), q.at("b"), act);
            ParamSet grad = q.zeros_like();
            grad.at("x") = temporal_conv1d_backward(q.at("x"), y, dy, q.at("w"), act, grad.at("w"), grad.at("b"));
            return grad;
          },
          rng));
    }

    for (Activation act : {Activation::Linear, Activation::Relu}) {
      const Index Ci = 8, Co = 6, L = 12;
      const ParamSet p = xwb(Ci, L, Co, Ci, rng);
      out.push_back(check_op(
          act == Activation::Linear ? "pointwise_conv_linear" : "pointwise_conv_relu", seed,
          act == Activation::Linear ? kLinearTol : kTol, p,
          [&](const ParamSet& q) { return pointwise_conv(q.at("x"), q.at("w"), q.at("b"), act); },
          [&](const ParamSet& q, const Matrix& dy) {
            const Matrix y = pointwise_conv(q.at("x"), q.at("w"), q.at("b"), act);
            ParamSet grad = q.zeros_like();
            grad.at("x") = pointwise_conv_backward(q.at("x"), y, dy, q.at("w"), act, grad.at("w"), grad.at("b"));
            return grad;
          },
          rng));
    }

    for (Activation act : {Activation::Linear, Activation::Relu}) {
      const Index Ci = 3, Co = 4, H = 5, W = 6;
      const ParamSet p = xwb(Ci, H * W, Co, 9 * Ci, rng);
      out.push_back(check_op(
          act == Activation::Linear ? "conv2d_3x3_linear" : "conv2d_3x3_relu", seed,
          act == Activation::Linear ? kLinearTol : kTol, p,
          [&](const ParamSet& q) { return conv2d_3x3(q.at("x"), H, W, q.at("w"), q.at("b"), act); },
          [&](const ParamSet& q, const Matrix& dy) {
            const Matrix y = conv2d_3x3(q.at("x"), H, W, q.at("w"), q.at("b"), act);
            ParamSet grad = q.zeros_like();
            grad.at("x") = conv2d_3x3_backward(q.at("x"), H, W, y, dy, q.at("w"), act, grad.at("w"), grad.at("b"));
            return grad;
          },
          rng));
    }

    {
      ParamSet p;
      p.add("x", 8, 12) = random_matrix(8, 12, rng);
      out.push_back(check_op(
          "avg_pool_temporal", seed, kLinearTol, p, [](const ParamSet& q) { return avg_pool_temporal(q.at("x"), 5); },
          [](const ParamSet&, const Matrix& dy) {
            ParamSet grad;
            grad.add("x", 8, 12) = dy * pool_matrix(12, 5).transpose();
            return grad;
          },
          rng));
      out.push_back(check_op(
          "linear_resize", seed, kLinearTol, p, [](const ParamSet& q) { return linear_resize(q.at("x"), 7); },
          [](const ParamSet&, const Matrix& dy) {
            ParamSet grad;
            grad.add("x", 8, 12) = dy * resize_matrix(12, 7).transpose();
            return grad;
          },
          rng));
      out.push_back(check_op(
          "sigmoid", seed, kTol, p, [](const ParamSet& q) { return sigmoid(q.at("x")); },
          [](const ParamSet& q, const Matrix& dy) {
            const Matrix s = sigmoid(q.at("x"));
            ParamSet grad;
            grad.add("x", 8, 12) = (dy.array() * s.array() * (1.0 - s.array())).matrix();
            return grad;
          },
          rng));
    }

    {
      const Index C = 4, L = 8, N = 4;
      ParamSet p;
      p.add("x", C, L) = random_matrix(C, L, rng);
      out.push_back(check_op(
          "bm_sample", seed, kLinearTol, p, [&](const ParamSet& q) { return bm_sample(q.at("x"), N).data; },
          [&](const ParamSet&, const Matrix& dy) {
            BMFeatureMap g{C, N, L, dy};
            ParamSet grad;
            grad.add("x", C, L) = bm_sample_backward(g, L);
            return grad;
          },
          rng));
    }

    {
      Stage1Config cfg;
      cfg.feature_channels = 8;
      cfg.query_length = 4;
      cfg.reference_length = 12;
      cfg.embed_dim = 6;
      cfg.ref_slots = 4;
      cfg.ctc_filters = {1, 3, 1};
      Stage1Model model(cfg, seed);
      jitter_biases(model.params(), rng);
      Stage1Sample sample{random_matrix(8, 4, rng), random_matrix(8, 12, rng), Vector(4)};
      sample.label << 1, -1, -1, 1;
      Stage1Model probe = model;
      DifferentiableFn fn{[&](const ParamSet& q) {
                            probe.params() = q;
                            return probe.loss(sample).total;
                          },
                          [&](const ParamSet& q) {
                            probe.params() = q;
                            ParamSet g = q.zeros_like();
                            probe.loss_and_grad(sample, g);
                            return g;
                          }};
      const auto r = grad_check(fn, model.params(), kEps);
      out.push_back({"stage1_total_loss", seed, r.max_rel_error, kTol, r.worst_block, static_cast<long long>(r.checked)});
    }

    {
      Stage2Config cfg;
      cfg.feature_channels = 5;
      cfg.query_length = 4;
      cfg.reference_length = 6;
      cfg.base_hidden = 6;
      cfg.channels = 4;
      cfg.samples = 4;
      cfg.head_channels = 4;
      Stage2Model model(cfg, seed);
      jitter_biases(model.params(), rng);
      jitter_weights(model.params(), rng);
      std::uniform_real_distribution<double> u(0.0, 6.0);
      double a = u(rng), b = u(rng);
      if (a > b) std::swap(a, b);
      if (b - a < 1.0) b = std::min(6.0, a + 1.0), a = b - 1.0;
      Stage2Sample sample{random_matrix(5, 4, rng), random_matrix(5, 6, rng), gt_label_map({{a, b}}, 6)};
      Stage2Model probe = model;
      DifferentiableFn fn{[&](const ParamSet& q) {
                            probe.params() = q;
                            return probe.loss(sample).total;
                          },
                          [&](const ParamSet& q) {
                            probe.params() = q;
                            ParamSet g = q.zeros_like();
                            probe.loss_and_grad(sample, g);
                            return g;
                          }};
      const auto r = grad_check(fn, model.params(), kEps);
      out.push_back({"stage2_total_loss", seed, r.max_rel_error, kTol, r.worst_block, static_cast<long long>(r.checked)});
    }
  }
  return out;
}

}  // namespace svmr::nn
