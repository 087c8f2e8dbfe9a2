#pragma once

// Two-dimensional projection of embedding vectors under cosine distance.
//
// Sets of five or more vectors use exact t-SNE; smaller sets use classical
// multidimensional scaling, where t-SNE's perplexity calibration is ill-posed.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "ivg/embedding.hpp"
#include "ivg/geometry.hpp"

namespace ivg {

struct ProjectionOptions {
  std::uint64_t seed = 42;
  std::optional<double> perplexity;  // default: perplexity_for(n)
  int iterations = 1000;
  int exaggeration_iterations = 250;
  double early_exaggeration = 12.0;
  std::optional<double> learning_rate;  // default: max(n / exaggeration / 4, 50)
  std::size_t min_tsne_points = 5;
};

// min(30, max(2, floor((n - 1) / 3)))
double perplexity_for(std::size_t n);

// Row-major n x n matrix of 1 - cos(a, b); zero vectors are at distance 1
// from everything except other zero vectors.
std::vector<double> cosine_distance_matrix(const std::vector<Vector>& vectors);

PointSet classical_mds(const std::vector<double>& distances, std::size_t n);

// Exact-gradient t-SNE over a precomputed distance matrix. Points with an
// `init` entry start from it (rescaled); the rest start from seeded noise.
PointSet tsne(const std::vector<double>& distances, std::size_t n, const ProjectionOptions& options,
              const std::vector<std::optional<Point2>>* init = nullptr);

// Degenerate input (all pairwise distances zero) yields the origin for every point.
PointSet project(const std::vector<Vector>& vectors, const ProjectionOptions& options = {},
                 const std::vector<std::optional<Point2>>* init = nullptr);

struct Projection2D {
  PointSet text_xy;   // text-space projection after alignment onto image space
  PointSet image_xy;
  PointSet combined_xy;
  double alpha = 0.5;
  double disparity = 0.0;
};

// alpha * text + (1 - alpha) * image per point. Throws std::invalid_argument
// when alpha is outside [0, 1] or the sets differ in size.
PointSet combine(const PointSet& text_xy, const PointSet& image_xy, double alpha = 0.5);

// Translate to the centroid and scale to unit root-mean-square radius.
// Coincident sets are only centred.
PointSet standardize(const PointSet& points);

}  // namespace ivg
