#pragma once

#include "svmr/tensor.hpp"

#include <random>

#include <unistd.h>

namespace testing {

inline svmr::Matrix random_matrix(svmr::Index rows, svmr::Index cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  svmr::Matrix m(rows, cols);
  for (svmr::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

// Rounds every entry to the nearest float, element by element.
inline svmr::Matrix float_rounded(svmr::Matrix m) {
  for (svmr::Index i = 0; i < m.size(); ++i) m.data()[i] = static_cast<float>(m.data()[i]);
  return m;
}

inline svmr::Vector random_vector(svmr::Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  svmr::Vector v(n);
  for (svmr::Index i = 0; i < n; ++i) v[i] = d(rng);
  return v;
}

}  // namespace testing

#include <filesystem>
#include <string>

namespace testing {

// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("svmr_test_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing
