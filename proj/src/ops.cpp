#include "svmr/ops.hpp"

#include "svmr/error.hpp"

#include <cmath>
#include <string>

namespace svmr::nn {
namespace {

std::string dims(Index r, Index c) { return std::to_string(r) + "x" + std::to_string(c); }

void check_bias(const Matrix& bias, Index out, const char* op) {
  if (bias.rows() != out || bias.cols() != 1)
    data_error(std::string(op) + ": bias must be " + dims(out, 1) + ", got " + dims(bias.rows(), bias.cols()));
}

void ensure_grad_shape(Matrix& g, const Matrix& like) {
  if (g.rows() != like.rows() || g.cols() != like.cols()) g = Matrix::Zero(like.rows(), like.cols());
}

void apply_activation(Matrix& z, Activation act) {
  if (act == Activation::Relu) z = z.cwiseMax(0.0);
}

Matrix ctc_im2col(const Tensor3& x) {
  const Index fin = x.filters();
  Matrix col = Matrix::Zero(x.channels * x.length, 3 * fin);
  for (Index c = 0; c < x.channels; ++c)
    for (Index l = 0; l < x.length; ++l)
      for (Index k = 0; k < 3; ++k) {
        const Index src = l + k - 1;
        if (src < 0 || src >= x.length) continue;
        for (Index fi = 0; fi < fin; ++fi) col(c * x.length + l, fi * 3 + k) = x.data(c * x.length + src, fi);
      }
  return col;
}

Matrix conv1d_im2col(const Matrix& x) {
  const Index cin = x.rows(), len = x.cols();
  Matrix col = Matrix::Zero(cin * 3, len);
  for (Index ci = 0; ci < cin; ++ci)
    for (Index k = 0; k < 3; ++k) {
      const Index shift = k - 1;
      const Index lo = std::max<Index>(0, -shift), hi = std::min<Index>(len, len - shift);
      if (hi > lo) col.row(ci * 3 + k).segment(lo, hi - lo) = x.row(ci).segment(lo + shift, hi - lo);
    }
  return col;
}

Matrix conv2d_im2col(const Matrix& x, Index h, Index w) {
  const Index cin = x.rows();
  Matrix col = Matrix::Zero(cin * 9, h * w);
  for (Index ci = 0; ci < cin; ++ci)
    for (Index ky = 0; ky < 3; ++ky)
      for (Index kx = 0; kx < 3; ++kx) {
        const Index r = ci * 9 + ky * 3 + kx;
        for (Index y = 0; y < h; ++y) {
          const Index sy = y + ky - 1;
          if (sy < 0 || sy >= h) continue;
          const Index lo = std::max<Index>(0, 1 - kx), hi = std::min<Index>(w, w + 1 - kx);
          if (hi > lo) col.row(r).segment(y * w + lo, hi - lo) = x.row(ci).segment(sy * w + lo + kx - 1, hi - lo);
        }
      }
  return col;
}

}  // namespace

Tensor3 ctc_forward(const Tensor3& x, const Matrix& weight, const Matrix& bias, Activation act) {
  if (weight.cols() != 3 * x.filters())
    data_error("ctc_forward: weight expects F_in=" + std::to_string(weight.cols() / 3) + " but input has F_in=" +
               std::to_string(x.filters()));
  check_bias(bias, weight.rows(), "ctc_forward");
  Tensor3 y;
  y.channels = x.channels;
  y.length = x.length;
  y.data = ctc_im2col(x) * weight.transpose();
  y.data.rowwise() += bias.col(0).transpose();
  apply_activation(y.data, act);
  return y;
}

Tensor3 ctc_backward(const Tensor3& x, const Tensor3& y, const Tensor3& dy, const Matrix& weight,
                     Activation act, Matrix& dweight, Matrix& dbias) {
  ensure_grad_shape(dweight, weight);
  if (dbias.rows() != weight.rows()) dbias = Matrix::Zero(weight.rows(), 1);
  const Matrix dz = activation_backward(y.data, dy.data, act);
  const Matrix col = ctc_im2col(x);
  dweight.noalias() += dz.transpose() * col;
  dbias.col(0) += dz.colwise().sum().transpose();
  const Matrix dcol = dz * weight;
  Tensor3 dx(x.channels, x.length, x.filters());
  for (Index c = 0; c < x.channels; ++c)
    for (Index l = 0; l < x.length; ++l)
      for (Index k = 0; k < 3; ++k) {
        const Index src = l + k - 1;
        if (src < 0 || src >= x.length) continue;
        for (Index fi = 0; fi < x.filters(); ++fi)
          dx.data(c * x.length + src, fi) += dcol(c * x.length + l, fi * 3 + k);
      }
  return dx;
}

Matrix temporal_conv1d(const Matrix& x, const Matrix& weight, const Matrix& bias, Activation act) {
  if (weight.cols() != 3 * x.rows())
    data_error("temporal_conv1d: weight expects C_in=" + std::to_string(weight.cols() / 3) + " but input has C_in=" +
               std::to_string(x.rows()));
  check_bias(bias, weight.rows(), "temporal_conv1d");
  Matrix y = weight * conv1d_im2col(x);
  y.colwise() += bias.col(0);
  apply_activation(y, act);
  return y;
}

Matrix temporal_conv1d_backward(const Matrix& x, const Matrix& y, const Matrix& dy, const Matrix& weight,
                                Activation act, Matrix& dweight, Matrix& dbias) {
  ensure_grad_shape(dweight, weight);
  if (dbias.rows() != weight.rows()) dbias = Matrix::Zero(weight.rows(), 1);
  const Matrix dz = activation_backward(y, dy, act);
  dweight.noalias() += dz * conv1d_im2col(x).transpose();
  dbias.col(0) += dz.rowwise().sum();
  const Matrix dcol = weight.transpose() * dz;
  const Index cin = x.rows(), len = x.cols();
  Matrix dx = Matrix::Zero(cin, len);
  for (Index ci = 0; ci < cin; ++ci)
    for (Index k = 0; k < 3; ++k) {
      const Index shift = k - 1;
      const Index lo = std::max<Index>(0, -shift), hi = std::min<Index>(len, len - shift);
      if (hi > lo) dx.row(ci).segment(lo + shift, hi - lo) += dcol.row(ci * 3 + k).segment(lo, hi - lo);
    }
  return dx;
}

Matrix pointwise_conv(const Matrix& x, const Matrix& weight, const Matrix& bias, Activation act) {
  if (weight.cols() != x.rows())
    data_error("pointwise_conv: weight expects C_in=" + std::to_string(weight.cols()) + " but input has C_in=" +
               std::to_string(x.rows()));
  check_bias(bias, weight.rows(), "pointwise_conv");
  Matrix y = weight * x;
  y.colwise() += bias.col(0);
  apply_activation(y, act);
  return y;
}

Matrix pointwise_conv_backward(const Matrix& x, const Matrix& y, const Matrix& dy, const Matrix& weight,
                               Activation act, Matrix& dweight, Matrix& dbias) {
  ensure_grad_shape(dweight, weight);
  if (dbias.rows() != weight.rows()) dbias = Matrix::Zero(weight.rows(), 1);
  const Matrix dz = activation_backward(y, dy, act);
  dweight.noalias() += dz * x.transpose();
  dbias.col(0) += dz.rowwise().sum();
  return weight.transpose() * dz;
}

Matrix conv2d_3x3(const Matrix& x, Index height, Index width, const Matrix& weight, const Matrix& bias,
                  Activation act) {
  if (x.cols() != height * width)
    data_error("conv2d_3x3: input has " + std::to_string(x.cols()) + " cells, grid is " + dims(height, width));
  if (weight.cols() != 9 * x.rows())
    data_error("conv2d_3x3: weight expects C_in=" + std::to_string(weight.cols() / 9) + " but input has C_in=" +
               std::to_string(x.rows()));
  check_bias(bias, weight.rows(), "conv2d_3x3");
  Matrix y = weight * conv2d_im2col(x, height, width);
  y.colwise() += bias.col(0);
  apply_activation(y, act);
  return y;
}

Matrix conv2d_3x3_backward(const Matrix& x, Index height, Index width, const Matrix& y, const Matrix& dy,
                           const Matrix& weight, Activation act, Matrix& dweight, Matrix& dbias) {
  ensure_grad_shape(dweight, weight);
  if (dbias.rows() != weight.rows()) dbias = Matrix::Zero(weight.rows(), 1);
  const Matrix dz = activation_backward(y, dy, act);
  dweight.noalias() += dz * conv2d_im2col(x, height, width).transpose();
  dbias.col(0) += dz.rowwise().sum();
  const Matrix dcol = weight.transpose() * dz;
  Matrix dx = Matrix::Zero(x.rows(), x.cols());
  for (Index ci = 0; ci < x.rows(); ++ci)
    for (Index ky = 0; ky < 3; ++ky)
      for (Index kx = 0; kx < 3; ++kx) {
        const Index r = ci * 9 + ky * 3 + kx;
        for (Index yy = 0; yy < height; ++yy) {
          const Index sy = yy + ky - 1;
          if (sy < 0 || sy >= height) continue;
          const Index lo = std::max<Index>(0, 1 - kx), hi = std::min<Index>(width, width + 1 - kx);
          if (hi > lo)
            dx.row(ci).segment(sy * width + lo + kx - 1, hi - lo) += dcol.row(r).segment(yy * width + lo, hi - lo);
        }
      }
  return dx;
}

Matrix pool_matrix(Index length, Index target) {
  if (target < 1) data_error("avg_pool_temporal: target must be >= 1");
  if (target > length)
    data_error("avg_pool_temporal: target " + std::to_string(target) + " exceeds length " + std::to_string(length));
  Matrix p = Matrix::Zero(length, target);
  for (Index j = 0; j < target; ++j) {
    const Index lo = j * length / target, hi = (j + 1) * length / target;
    for (Index i = lo; i < hi; ++i) p(i, j) = 1.0 / static_cast<double>(hi - lo);
  }
  return p;
}

Matrix resize_matrix(Index length, Index target) {
  if (length < 1) data_error("linear_resize: empty input");
  if (target < 1) data_error("linear_resize: target must be >= 1");
  Matrix r = Matrix::Zero(length, target);
  for (Index j = 0; j < target; ++j) {
    const double pos = target == 1 ? 0.5 * static_cast<double>(length - 1)
                                   : static_cast<double>(j) * static_cast<double>(length - 1) /
                                         static_cast<double>(target - 1);
    const auto lo = static_cast<Index>(std::floor(pos));
    const Index hi = std::min(lo + 1, length - 1);
    const double frac = pos - static_cast<double>(lo);
    r(lo, j) += 1.0 - frac;
    if (frac > 0.0) r(hi, j) += frac;
  }
  return r;
}

Matrix avg_pool_temporal(const Matrix& x, Index target) { return x * pool_matrix(x.cols(), target); }

Matrix linear_resize(const Matrix& x, Index target) {
  if (x.rows() < 1) data_error("linear_resize: empty input");
  if (x.cols() == target) return x;
  return x * resize_matrix(x.cols(), target);
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

Matrix sigmoid(const Matrix& z) { return z.unaryExpr([](double v) { return sigmoid(v); }); }

Matrix activation_backward(const Matrix& y, const Matrix& dy, Activation act) {
  if (act == Activation::Linear) return dy;
  return dy.cwiseProduct((y.array() > 0.0).cast<double>().matrix());
}

void kaiming_uniform(Matrix& weight, Index fan_in, std::mt19937_64& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(std::max<Index>(fan_in, 1)));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Index i = 0; i < weight.size(); ++i) weight.data()[i] = dist(rng);
}

void dirac_init(Matrix& weight, double noise, std::mt19937_64& rng) {
  if (weight.cols() % 3 != 0) data_error("dirac_init: weight columns must be 3 * F_in");
  const Index f_out = weight.rows(), f_in = weight.cols() / 3;
  kaiming_uniform(weight, weight.cols(), rng);
  weight *= noise;
  if (f_out >= f_in) {
    for (Index fo = 0; fo < f_out; ++fo) weight(fo, (fo % f_in) * 3 + 1) += 1.0;
  } else {
    for (Index fi = 0; fi < f_in; ++fi) {
      const Index fo = fi % f_out;
      const Index copies = f_in / f_out + (fo < f_in % f_out ? 1 : 0);
      weight(fo, fi * 3 + 1) += 1.0 / static_cast<double>(copies);
    }
  }
}

}  // namespace svmr::nn
