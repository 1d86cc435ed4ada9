#pragma once

#include "svmr/tensor.hpp"

namespace svmr {

/// Cell (s, d) is the grid interval [s, s + d + 1); valid iff s + d + 1 <= L.
inline bool bm_valid(Index start, Index duration, Index length) { return start + duration + 1 <= length; }

/// L x L mask with 1 on valid cells (row = start, column = duration).
Matrix bm_mask(Index length);

/// Classification and regression score maps; invalid cells are 0.
struct BMScoreMaps {
  Matrix classification;  // M_C
  Matrix regression;      // M_R

  Index length() const { return classification.rows(); }
};

/// Max-tIoU label map G_C over candidate cells; invalid cells are 0.
struct LabelMap {
  Matrix iou;

  Index length() const { return iou.rows(); }
};

}  // namespace svmr
