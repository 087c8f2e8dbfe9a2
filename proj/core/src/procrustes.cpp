#include "ivg/procrustes.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>

namespace ivg {

ProcrustesResult procrustes_align(const PointSet& source, const PointSet& target) {
  if (source.size() != target.size()) {
    throw std::invalid_argument("procrustes: point counts differ");
  }
  if (source.size() < 2) throw std::invalid_argument("procrustes: need at least two points");

  const Point2 mean_src = centroid(source);
  const Point2 mean_tgt = centroid(target);
  const auto n = static_cast<Eigen::Index>(source.size());
  Eigen::MatrixX2d x(n, 2), y(n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(i);
    x(i, 0) = source[k].x - mean_src.x;
    x(i, 1) = source[k].y - mean_src.y;
    y(i, 0) = target[k].x - mean_tgt.x;
    y(i, 1) = target[k].y - mean_tgt.y;
  }
  const double norm_y = y.norm();
  if (norm_y == 0.0) throw std::invalid_argument("procrustes: target points are coincident");

  ProcrustesResult result;
  const double norm_x = x.norm();
  if (norm_x == 0.0) {
    result.transformed = source;
    result.disparity = 1.0;
    result.degenerate_source = true;
    return result;
  }
  x /= norm_x;
  y /= norm_y;

  Eigen::JacobiSVD<Eigen::Matrix2d> svd(x.transpose() * y, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::Matrix2d r = svd.matrixU() * svd.matrixV().transpose();
  const double trace = svd.singularValues().sum();
  result.disparity = std::max(0.0, 1.0 - trace * trace);

  // Optimal scale in target units maps standardized x*R onto y.
  result.scale = trace * norm_y / norm_x;
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < 2; ++j) result.rotation[i][j] = r(i, j);
  }
  const Eigen::MatrixX2d fitted = (x * r) * (trace * norm_y);
  result.transformed.resize(source.size());
  for (Eigen::Index i = 0; i < n; ++i) {
    result.transformed[static_cast<std::size_t>(i)] = {fitted(i, 0) + mean_tgt.x,
                                                       fitted(i, 1) + mean_tgt.y};
  }
  // p' = s * (p - mean_src) * R + mean_tgt
  const double tx = mean_src.x * r(0, 0) + mean_src.y * r(1, 0);
  const double ty = mean_src.x * r(0, 1) + mean_src.y * r(1, 1);
  result.translation = {mean_tgt.x - result.scale * tx, mean_tgt.y - result.scale * ty};
  return result;
}

}  // namespace ivg
