#include "ivg/clustering.hpp"

#include <limits>
#include <numeric>

namespace ivg {

ClusterAssignment cluster_average_linkage(const PointSet& points, double distance_threshold) {
  const std::size_t n = points.size();
  ClusterAssignment out;
  out.cluster_distance = distance_threshold;
  out.labels.assign(n, 0);
  if (n == 0) return out;

  std::vector<double> d(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) d[i * n + j] = d[j * n + i] = distance(points[i], points[j]);
  }
  // Each cluster is represented by its lowest member index.
  std::vector<std::size_t> size(n, 1);
  std::vector<bool> active(n, true);
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), 0);

  for (std::size_t merges = 0; merges + 1 < n; ++merges) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (!active[i]) continue;
      for (std::size_t j = i + 1; j < n; ++j) {
        if (active[j] && d[i * n + j] < best) {
          best = d[i * n + j];
          bi = i;
          bj = j;
        }
      }
    }
    if (!(best < distance_threshold)) break;

    // Lance-Williams update for average linkage.
    const double si = static_cast<double>(size[bi]);
    const double sj = static_cast<double>(size[bj]);
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == bi || k == bj) continue;
      const double merged = (si * d[bi * n + k] + sj * d[bj * n + k]) / (si + sj);
      d[bi * n + k] = d[k * n + bi] = merged;
    }
    size[bi] += size[bj];
    active[bj] = false;
    parent[bj] = bi;
  }

  std::vector<int> id_of_root(n, -1);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t root = i;
    while (parent[root] != root) root = parent[root];
    if (id_of_root[root] < 0) id_of_root[root] = next++;
    out.labels[i] = id_of_root[root];
  }
  out.cluster_count = next;
  return out;
}

}  // namespace ivg
