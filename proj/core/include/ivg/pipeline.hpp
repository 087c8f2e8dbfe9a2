#pragma once

// One graph build over a session snapshot: prompts, embeddings, projection,
// clusters, edges and the renderable layout.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ivg/clustering.hpp"
#include "ivg/embedding.hpp"
#include "ivg/graph.hpp"
#include "ivg/layout.hpp"
#include "ivg/projection.hpp"
#include "ivg/store.hpp"

namespace ivg {

inline constexpr double kDefaultClusterDistance = 0.8;

struct BuildParams {
  double alpha = 0.5;
  GraphParams graph;
  double cluster_distance = kDefaultClusterDistance;
  GroupingMode grouping = GroupingMode::cluster;
  std::uint64_t seed = 42;
  LayoutOptions layout;
  bool allow_degraded = false;

  // Throws ParamError naming the first out-of-range field.
  void validate() const;
};

class ParamError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Reads alpha, s_min, w_min, n_e, cluster_distance, grouping, seed and
// passes from string pairs (query parameters) on top of `base`; unknown keys
// are rejected. Throws ParamError.
BuildParams parse_build_params(const std::multimap<std::string, std::string>& query, BuildParams base = {});

// Stable textual key of every parameter that affects the output.
std::string params_key(const BuildParams& params);

struct GraphLayout {
  std::string session_id;
  std::uint64_t version = 0;
  BuildParams params;

  std::vector<StepRecord> records;  // in step order
  std::vector<PromptStep> steps;
  PhraseTable phrases;
  std::vector<ImageNode> nodes;
  std::vector<std::string> node_ids;  // "<step id>:<index>"
  std::vector<double> aspect;         // width / height per node

  Projection2D projection;
  ClusterAssignment clusters;
  std::vector<double> similarity;  // steps x steps
  std::vector<SimilarPair> pairs;

  std::vector<Edge> edges;
  std::vector<BundledEdge> bundles;
  std::vector<MergedEdge> merged;
  FilterResult filter;
  std::vector<double> node_weights;

  std::vector<NodePlacement> placements;
  std::vector<GlyphSpec> glyphs;
  StageSegmentation stages;
  std::vector<BubbleSpec> bubbles;
  MiniMapModel minimap;

  bool degraded = false;
  std::vector<std::string> warnings;
};

// Builds a layout. When `previous` holds an earlier build of the same
// session, its positions seed the projection of shared nodes and the new
// positions are aligned onto it. Throws ParamError for invalid params and
// EmbeddingError when embeddings fail without allow_degraded.
std::shared_ptr<const GraphLayout> build_layout(const SessionSnapshot& snapshot, EmbeddingProvider& provider,
                                                EmbeddingCache* cache, const BuildParams& params,
                                                const GraphLayout* previous = nullptr);

// Prompts of every step, parsed with the phrases detected over the session.
std::vector<PromptTokens> parse_session_prompts(const SessionSnapshot& snapshot);

// Consecutive-step similarities of a snapshot, as used for stage segmentation.
std::vector<double> consecutive_similarities(const SessionSnapshot& snapshot);

StageSegmentation session_stages(const SessionSnapshot& snapshot, double s_min);

}  // namespace ivg
