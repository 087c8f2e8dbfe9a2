#pragma once

#include <cstddef>
#include <vector>

#include "ivg/geometry.hpp"

namespace ivg {

struct ClusterAssignment {
  // labels[i] is the cluster of point i; ids are dense from 0 in order of
  // each cluster's lowest member index.
  std::vector<int> labels;
  int cluster_count = 0;
  double cluster_distance = 0.0;
};

// Average-linkage agglomeration on Euclidean distance. Clusters merge while
// their linkage distance is strictly below `distance_threshold`; ties go to
// the pair with the lowest (first, second) member index.
ClusterAssignment cluster_average_linkage(const PointSet& points, double distance_threshold);

}  // namespace ivg
