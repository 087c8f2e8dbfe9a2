#pragma once

// Image Variant Graph edges: one edge per word modification per image pair,
// weighted, bundled by cluster, re-weighted against the bundles, merged where
// indistinguishable and filtered for display.

#include <cstddef>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "ivg/diff.hpp"
#include "ivg/prompt.hpp"

namespace ivg {

using NodeIndex = std::size_t;
inline constexpr std::size_t kNoBundle = std::numeric_limits<std::size_t>::max();

struct ImageNode {
  std::string image_id;
  std::string step_id;
  int temporal_order = 0;  // order of the step that produced the image
  std::size_t step_index = 0;
};

// One prompting step with the nodes of the images it produced.
struct PromptStep {
  std::string step_id;
  int order = 0;
  PromptTokens tokens;
  std::vector<NodeIndex> images;
};

struct GraphParams {
  double s_min = 0.6;
  std::optional<double> w_min;  // nullopt: derived from n_e
  int n_e = 12;
  int redistribution_passes = 1;
};

// Row-major n x n Jaccard similarities between step prompts.
std::vector<double> similarity_matrix(const std::vector<PromptStep>& steps);

struct SimilarPair {
  std::size_t earlier = 0;  // step indices, earlier < later
  std::size_t later = 0;
  double similarity = 0.0;
  PromptDiff diff;
};

// Diffs every step pair whose similarity is at least s_min.
std::vector<SimilarPair> compare_similar_pairs(const std::vector<PromptStep>& steps,
                                               const std::vector<double>& similarity, double s_min);

struct Edge {
  std::string word;
  EditAction action = EditAction::insert;
  NodeIndex src = 0;
  NodeIndex tgt = 0;
  double weight = 0.0;
  std::size_t bundle = kNoBundle;
};

struct BundledEdge {
  std::string word;
  EditAction action = EditAction::insert;
  int src_cluster = 0;
  int tgt_cluster = 0;
  double weight = 0.0;
  std::vector<std::size_t> members;  // indices into the edge list
  bool visible = true;
};

// Each similar pair (n1 images, n2 images, m ops) contributes n1 * n2 * m
// edges of weight 1 / (n1 * n2 * m), directed earlier -> later.
std::vector<Edge> derive_edges(const std::vector<PromptStep>& steps,
                               const std::vector<SimilarPair>& pairs, const GraphParams& params);

// Partitions edges by (word, action, C(src), C(tgt)); sets Edge::bundle.
std::vector<BundledEdge> bundle(std::vector<Edge>& edges, const std::vector<int>& cluster_of_node);

// W(e) = W(E_e) / sum over edges e' on the same image pair of W(E_e'),
// followed by re-summing bundle weights; repeated `passes` times.
void redistribute(std::vector<Edge>& edges, std::vector<BundledEdge>& bundles, int passes = 1);

struct Modification {
  std::string word;
  EditAction action = EditAction::insert;
  double weight_share = 0.0;
  int frequency = 1;
};

// An edge as drawn: a single modification, or several equal-weight ones merged.
struct MergedEdge {
  NodeIndex src = 0;
  NodeIndex tgt = 0;
  std::vector<Modification> modifications;
  std::vector<std::size_t> edges;  // source edge indices

  bool merged() const { return edges.size() > 1; }
  double weight() const;
};

inline constexpr double kMergeTolerance = 1e-9;

std::vector<MergedEdge> merge_equal(const std::vector<Edge>& edges);

struct FilterResult {
  double effective_w_min = 0.0;
  std::size_t visible_count = 0;
  bool automatic = true;
};

// Marks bundles with weight >= w_min visible. In automatic mode w_min is
// the weight of the n_e-th heaviest bundle, raised past any tie that would
// let more than n_e through. Throws std::invalid_argument for a negative
// manual w_min or non-positive n_e.
FilterResult filter(std::vector<BundledEdge>& bundles, const GraphParams& params);

std::vector<double> node_weights(std::size_t node_count, const std::vector<Edge>& edges);

}  // namespace ivg
