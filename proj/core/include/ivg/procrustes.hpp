#pragma once

#include "ivg/geometry.hpp"

namespace ivg {

struct ProcrustesResult {
  // Source mapped onto the target frame by the least-squares similarity.
  PointSet transformed;
  // Residual sum of squares after both sets are centred and scaled to unit
  // Frobenius norm; in [0, 1].
  double disparity = 0.0;
  double scale = 1.0;
  double rotation[2][2] = {{1.0, 0.0}, {0.0, 1.0}};  // row-vector convention: p' = p * R
  Point2 translation;
  bool degenerate_source = false;
};

// Full Procrustes (translation, uniform scale, orthogonal map including
// reflections). Throws std::invalid_argument when sizes differ, fewer than
// two points are given, or the target is coincident. A coincident source
// yields the identity transform with disparity 1.
ProcrustesResult procrustes_align(const PointSet& source, const PointSet& target);

}  // namespace ivg
