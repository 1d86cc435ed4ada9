#include "svmr/tensor.hpp"

#include "svmr/error.hpp"

#include <algorithm>

namespace svmr {

Tensor3 Tensor3::from_matrix(const Matrix& m) {
  Tensor3 t;
  t.channels = m.rows();
  t.length = m.cols();
  t.data = Eigen::Map<const Matrix>(m.data(), m.rows() * m.cols(), 1);
  return t;
}

Matrix Tensor3::to_matrix() const {
  if (filters() != 1) data_error("Tensor3::to_matrix: filters must be 1, got " + std::to_string(filters()));
  return Eigen::Map<const Matrix>(data.data(), channels, length);
}

Matrix& ParamSet::add(std::string name, Index rows, Index cols) {
  if (contains(name)) data_error("duplicate parameter block '" + name + "'");
  entries_.emplace_back(std::move(name), Matrix::Zero(rows, cols));
  return entries_.back().second;
}

Matrix& ParamSet::at(std::string_view name) {
  for (auto& [n, m] : entries_)
    if (n == name) return m;
  data_error("unknown parameter block '" + std::string(name) + "'");
}

const Matrix& ParamSet::at(std::string_view name) const {
  for (const auto& [n, m] : entries_)
    if (n == name) return m;
  data_error("unknown parameter block '" + std::string(name) + "'");
}

bool ParamSet::contains(std::string_view name) const {
  return std::any_of(entries_.begin(), entries_.end(), [&](const auto& e) { return e.first == name; });
}

ParamSet ParamSet::zeros_like() const {
  ParamSet out;
  out.init_seed = init_seed;
  for (const auto& [n, m] : entries_) out.add(n, m.rows(), m.cols());
  return out;
}

void ParamSet::set_zero() {
  for (auto& e : entries_) e.second.setZero();
}

Index ParamSet::scalar_count() const {
  Index n = 0;
  for (const auto& e : entries_) n += e.second.size();
  return n;
}

bool ParamSet::all_finite() const {
  return std::all_of(entries_.begin(), entries_.end(), [](const auto& e) { return e.second.allFinite(); });
}

void ParamSet::axpy(double scale, const ParamSet& other) {
  if (!same_shapes(*this, other)) data_error("ParamSet::axpy: shape mismatch");
  for (std::size_t i = 0; i < entries_.size(); ++i) entries_[i].second += scale * other.entries()[i].second;
}

bool same_shapes(const ParamSet& a, const ParamSet& b) {
  if (a.entries().size() != b.entries().size()) return false;
  for (std::size_t i = 0; i < a.entries().size(); ++i) {
    const auto& [na, ma] = a.entries()[i];
    const auto& [nb, mb] = b.entries()[i];
    if (na != nb || ma.rows() != mb.rows() || ma.cols() != mb.cols()) return false;
  }
  return true;
}

}  // namespace svmr
