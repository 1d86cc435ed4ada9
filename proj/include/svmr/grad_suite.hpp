#pragma once

// Finite-difference suite over every trainable operator and both full losses.

#include <cstdint>
#include <string>
#include <vector>

namespace svmr::nn {

struct GradSuiteEntry {
  std::string name;
  std::uint64_t seed = 0;
  double max_rel_error = 0.0;
  double tolerance = 0.0;
  std::string worst_block;
  long long checked = 0;

  bool passed() const { return max_rel_error <= tolerance; }
};

/// Linear operators are held to 1e-4, everything else to 1e-3. Shapes stay
/// within C = 8, L = 12.
std::vector<GradSuiteEntry> run_grad_suite(const std::vector<std::uint64_t>& seeds);

}  // namespace svmr::nn
