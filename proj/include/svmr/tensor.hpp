#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace svmr {

using Index = Eigen::Index;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

/// Channel x length x filter tensor used by the concept-wise temporal
/// convolution. Stored as a (channels * length) x filters row-major matrix, so
/// element (c, l, f) lives at data(c * length + l, f).
struct Tensor3 {
  Index channels = 0;
  Index length = 0;
  Matrix data;

  Tensor3() = default;
  Tensor3(Index c, Index l, Index f) : channels(c), length(l), data(Matrix::Zero(c * l, f)) {}

  Index filters() const { return data.cols(); }
  double& at(Index c, Index l, Index f) { return data(c * length + l, f); }
  double at(Index c, Index l, Index f) const { return data(c * length + l, f); }

  /// Wraps a C x L matrix as a C x L x 1 tensor.
  static Tensor3 from_matrix(const Matrix& m);
  /// Inverse of from_matrix; requires filters() == 1.
  Matrix to_matrix() const;
};

/// Ordered set of named 2-D parameter blocks. Biases are stored as n x 1.
class ParamSet {
 public:
  Matrix& add(std::string name, Index rows, Index cols);
  Matrix& at(std::string_view name);
  const Matrix& at(std::string_view name) const;
  bool contains(std::string_view name) const;

  const std::vector<std::pair<std::string, Matrix>>& entries() const { return entries_; }
  std::vector<std::pair<std::string, Matrix>>& entries() { return entries_; }

  ParamSet zeros_like() const;
  void set_zero();
  Index scalar_count() const;
  bool all_finite() const;
  /// this += scale * other; shapes must match.
  void axpy(double scale, const ParamSet& other);

  std::uint64_t init_seed = 0;

 private:
  std::vector<std::pair<std::string, Matrix>> entries_;
};

bool same_shapes(const ParamSet& a, const ParamSet& b);

}  // namespace svmr
