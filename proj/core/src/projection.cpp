#include "ivg/projection.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

namespace ivg {

double perplexity_for(std::size_t n) {
  const double third = n > 0 ? std::floor(static_cast<double>(n - 1) / 3.0) : 0.0;
  return std::min(30.0, std::max(2.0, third));
}

std::vector<double> cosine_distance_matrix(const std::vector<Vector>& vectors) {
  const std::size_t n = vectors.size();
  std::vector<double> norms(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    for (double x : vectors[i]) s += x * x;
    norms[i] = std::sqrt(s);
  }
  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double value;
      if (norms[i] == 0.0 || norms[j] == 0.0) {
        value = (norms[i] == 0.0 && norms[j] == 0.0) ? 0.0 : 1.0;
      } else {
        double dot = 0.0;
        const auto& a = vectors[i];
        const auto& b = vectors[j];
        for (std::size_t k = 0; k < std::min(a.size(), b.size()); ++k) dot += a[k] * b[k];
        value = std::clamp(1.0 - dot / (norms[i] * norms[j]), 0.0, 2.0);
        // Unit vectors that agree to rounding are the same point.
        if (value < 1e-12) value = 0.0;
      }
      d[i * n + j] = d[j * n + i] = value;
    }
  }
  return d;
}

PointSet classical_mds(const std::vector<double>& distances, std::size_t n) {
  PointSet out(n);
  if (n < 2) return out;
  Eigen::MatrixXd d2(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const double d = distances[i * n + j];
      d2(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = d * d;
    }
  }
  const Eigen::MatrixXd centering =
      Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n)) -
      Eigen::MatrixXd::Constant(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n),
                                1.0 / static_cast<double>(n));
  const Eigen::MatrixXd gram = -0.5 * centering * d2 * centering;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gram);
  const auto& values = solver.eigenvalues();  // ascending
  const auto& vectors = solver.eigenvectors();
  const Eigen::Index last = static_cast<Eigen::Index>(n) - 1;
  for (int axis = 0; axis < 2 && last - axis >= 0; ++axis) {
    const Eigen::Index col = last - axis;
    const double lambda = values(col);
    if (lambda <= 1e-12) continue;
    Eigen::VectorXd v = vectors.col(col);
    // Fix the eigenvector sign: largest-magnitude component positive.
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    const double scale = std::sqrt(lambda);
    for (std::size_t i = 0; i < n; ++i) {
      const double c = v(static_cast<Eigen::Index>(i)) * scale;
      if (axis == 0) out[i].x = c;
      else out[i].y = c;
    }
  }
  return out;
}

namespace {

// Row-conditional affinities calibrated to the target perplexity,
// symmetrized and normalized to sum to one.
std::vector<double> joint_probabilities(const std::vector<double>& dist, std::size_t n,
                                        double perplexity) {
  std::vector<double> p(n * n, 0.0);
  const double target_entropy = std::log(perplexity);
  std::vector<double> row(n);
  for (std::size_t i = 0; i < n; ++i) {
    double beta = 1.0;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 200; ++iter) {
      double min_d = std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i) min_d = std::min(min_d, dist[i * n + j]);
      }
      double sum = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        row[j] = j == i ? 0.0 : std::exp(-beta * (dist[i * n + j] - min_d));
        sum += row[j];
      }
      double weighted = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        row[j] /= sum;
        weighted += row[j] * (dist[i * n + j] - min_d);
      }
      const double entropy = std::log(sum) + beta * weighted;
      const double diff = entropy - target_entropy;
      if (std::abs(diff) < 1e-5) break;
      if (diff > 0) {
        lo = beta;
        beta = std::isinf(hi) ? beta * 2.0 : (beta + hi) / 2.0;
      } else {
        hi = beta;
        beta = std::isinf(lo) ? beta / 2.0 : (beta + lo) / 2.0;
      }
    }
    for (std::size_t j = 0; j < n; ++j) p[i * n + j] = row[j];
  }
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double s = p[i * n + j] + p[j * n + i];
      p[i * n + j] = p[j * n + i] = s;
      total += 2.0 * s;
    }
  }
  for (auto& x : p) x = std::max(x / total, 1e-12);
  return p;
}

double gaussian(std::mt19937_64& rng) {
  // Box-Muller over raw engine output keeps results platform independent.
  constexpr double two_pi = 6.283185307179586;
  const double u1 = (static_cast<double>(rng() >> 11) + 1.0) * 0x1.0p-53;
  const double u2 = static_cast<double>(rng() >> 11) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

}  // namespace

PointSet tsne(const std::vector<double>& distances, std::size_t n, const ProjectionOptions& options,
              const std::vector<std::optional<Point2>>* init) {
  const double perplexity = options.perplexity.value_or(perplexity_for(n));
  const std::vector<double> p = joint_probabilities(distances, n, perplexity);

  std::mt19937_64 rng(options.seed);
  std::vector<double> y(2 * n);
  for (auto& v : y) v = 1e-4 * gaussian(rng);
  if (init && init->size() == n) {
    PointSet known;
    for (const auto& q : *init) {
      if (q) known.push_back(*q);
    }
    if (!known.empty()) {
      const Point2 c = centroid(known);
      double rms = 0.0;
      for (const auto& q : known) rms += (q.x - c.x) * (q.x - c.x) + (q.y - c.y) * (q.y - c.y);
      rms = std::sqrt(rms / static_cast<double>(known.size()));
      const double scale = rms > 0.0 ? 1e-4 / rms : 1.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (const auto& q = (*init)[i]) {
          y[2 * i] = (q->x - c.x) * scale;
          y[2 * i + 1] = (q->y - c.y) * scale;
        }
      }
    }
  }

  const double learning_rate = options.learning_rate.value_or(
      std::max(static_cast<double>(n) / options.early_exaggeration / 4.0, 50.0));
  std::vector<double> update(2 * n, 0.0);
  std::vector<double> gains(2 * n, 1.0);
  std::vector<double> grad(2 * n, 0.0);
  std::vector<double> num(n * n, 0.0);

  for (int iter = 0; iter < options.iterations; ++iter) {
    const bool exaggerate = iter < options.exaggeration_iterations;
    const double exaggeration = exaggerate ? options.early_exaggeration : 1.0;
    const double momentum = exaggerate ? 0.5 : 0.8;

    double qsum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        const double dx = y[2 * i] - y[2 * j];
        const double dy = y[2 * i + 1] - y[2 * j + 1];
        const double q = 1.0 / (1.0 + dx * dx + dy * dy);
        num[i * n + j] = num[j * n + i] = q;
        qsum += 2.0 * q;
      }
    }
    std::fill(grad.begin(), grad.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      double gx = 0.0, gy = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double q = num[i * n + j];
        const double mult = (exaggeration * p[i * n + j] - q / qsum) * q;
        gx += mult * (y[2 * i] - y[2 * j]);
        gy += mult * (y[2 * i + 1] - y[2 * j + 1]);
      }
      grad[2 * i] = 4.0 * gx;
      grad[2 * i + 1] = 4.0 * gy;
    }
    for (std::size_t k = 0; k < 2 * n; ++k) {
      const bool same_sign = (grad[k] > 0.0) == (update[k] > 0.0);
      gains[k] = same_sign ? std::max(gains[k] * 0.8, 0.01) : gains[k] + 0.2;
      update[k] = momentum * update[k] - learning_rate * gains[k] * grad[k];
      y[k] += update[k];
    }
  }

  PointSet out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = {y[2 * i], y[2 * i + 1]};
  const Point2 c = centroid(out);
  for (auto& q : out) q = q - c;
  return out;
}

PointSet project(const std::vector<Vector>& vectors, const ProjectionOptions& options,
                 const std::vector<std::optional<Point2>>* init) {
  const std::size_t n = vectors.size();
  if (n < 2) return PointSet(n);
  const std::vector<double> d = cosine_distance_matrix(vectors);
  if (*std::max_element(d.begin(), d.end()) == 0.0) return PointSet(n);
  if (n < options.min_tsne_points) return classical_mds(d, n);
  return tsne(d, n, options, init);
}

PointSet combine(const PointSet& text_xy, const PointSet& image_xy, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must be in [0, 1]");
  if (text_xy.size() != image_xy.size()) {
    throw std::invalid_argument("combine: point sets differ in size");
  }
  PointSet out(text_xy.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = {alpha * text_xy[i].x + (1.0 - alpha) * image_xy[i].x,
              alpha * text_xy[i].y + (1.0 - alpha) * image_xy[i].y};
  }
  return out;
}

PointSet standardize(const PointSet& points) {
  PointSet out = points;
  const Point2 c = centroid(points);
  double ss = 0.0;
  for (auto& q : out) {
    q = q - c;
    ss += q.x * q.x + q.y * q.y;
  }
  if (out.empty() || ss <= 0.0) return out;
  const double inv = 1.0 / std::sqrt(ss / static_cast<double>(out.size()));
  for (auto& q : out) q = q * inv;
  return out;
}

}  // namespace ivg
