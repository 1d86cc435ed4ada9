#pragma once

// Differentiable operator set shared by both stages. Every forward op has a
// matching backward that returns the input gradient and accumulates parameter
// gradients into caller-owned buffers.

#include "svmr/tensor.hpp"

#include <random>

namespace svmr::nn {

enum class Activation { Linear, Relu };

// Concept-wise temporal convolution. weight is F_out x (3 * F_in) with column
// fi * 3 + k holding the tap applied to position l + k - 1; the same kernels
// are used for every channel, so channel c of the output only sees channel c
// of the input. Zero padding keeps the length fixed.
Tensor3 ctc_forward(const Tensor3& x, const Matrix& weight, const Matrix& bias, Activation act);
Tensor3 ctc_backward(const Tensor3& x, const Tensor3& y, const Tensor3& dy, const Matrix& weight,
                     Activation act, Matrix& dweight, Matrix& dbias);

// Kernel-3 temporal convolution mixing channels: x is C_in x L, weight is
// C_out x (3 * C_in) with column ci * 3 + k.
Matrix temporal_conv1d(const Matrix& x, const Matrix& weight, const Matrix& bias, Activation act);
Matrix temporal_conv1d_backward(const Matrix& x, const Matrix& y, const Matrix& dy, const Matrix& weight,
                                Activation act, Matrix& dweight, Matrix& dbias);

// Kernel-1 channel mixing: y = act(W x + b). Used for channel projections and
// for the N x 1 x 1 sample-axis reductions once the sample axis is folded into
// the channel axis.
Matrix pointwise_conv(const Matrix& x, const Matrix& weight, const Matrix& bias, Activation act);
Matrix pointwise_conv_backward(const Matrix& x, const Matrix& y, const Matrix& dy, const Matrix& weight,
                               Activation act, Matrix& dweight, Matrix& dbias);

// 3x3 convolution over an H x W grid; x is C_in x (H * W), weight is
// C_out x (9 * C_in) with column ci * 9 + ky * 3 + kx. Zero padding.
Matrix conv2d_3x3(const Matrix& x, Index height, Index width, const Matrix& weight, const Matrix& bias,
                  Activation act);
Matrix conv2d_3x3_backward(const Matrix& x, Index height, Index width, const Matrix& y, const Matrix& dy,
                           const Matrix& weight, Activation act, Matrix& dweight, Matrix& dbias);

/// L x target averaging matrix over contiguous near-equal windows
/// [floor(j L / target), floor((j + 1) L / target)).
Matrix pool_matrix(Index length, Index target);
/// L x target linear interpolation matrix with aligned endpoints.
Matrix resize_matrix(Index length, Index target);

Matrix avg_pool_temporal(const Matrix& x, Index target);
Matrix linear_resize(const Matrix& x, Index target);

double sigmoid(double z);
Matrix sigmoid(const Matrix& z);

/// Gradient through an activation given its output.
Matrix activation_backward(const Matrix& y, const Matrix& dy, Activation act);

/// Uniform Kaiming-style init: U(-b, b) with b = sqrt(6 / fan_in).
void kaiming_uniform(Matrix& weight, Index fan_in, std::mt19937_64& rng);

/// Near-identity init for a ctc weight (F_out x 3 F_in): the centre tap
/// copies (or averages) input filters onto output filters, plus Kaiming noise
/// scaled by `noise` to break symmetry between copies.
void dirac_init(Matrix& weight, double noise, std::mt19937_64& rng);

}  // namespace svmr::nn
