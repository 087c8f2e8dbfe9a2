#pragma once

// Renderable layout: node placement, word glyphs, bubbles, exploration
// stages and the navigation mini-map.

#include <cstddef>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "ivg/geometry.hpp"
#include "ivg/graph.hpp"

namespace ivg {

enum class NodeMode { thumbnail, rect };
std::string_view to_string(NodeMode mode);

struct Viewport {
  double width = 1200.0;
  double height = 800.0;
  double margin = 48.0;
};

struct LayoutOptions {
  Viewport viewport;
  double thumb_size = 64.0;  // longest side of a thumbnail, pixels
  double rect_size = 10.0;   // side of the small rectangle for hidden images
};

struct NodePlacement {
  NodeIndex node = 0;
  Point2 xy;  // centre, viewport pixels
  NodeMode mode = NodeMode::rect;
  double width = 0.0;
  double height = 0.0;
  int order_shade = 0;  // gray level 0-255, darker is later

  Rect bounds() const { return {xy.x - width / 2, xy.y - height / 2, width, height}; }
};

// Gray level for a temporal order within [first, last]; lighter is earlier.
int order_shade(int order, int first, int last);

// Affine map into the viewport (aspect ratio preserved), then a greedy pass
// in descending weight (earlier step first on ties) that keeps a node as a
// thumbnail when its rectangle overlaps no thumbnail placed before it.
// `aspect` holds width / height per node; empty means square.
std::vector<NodePlacement> place_nodes(const std::vector<ImageNode>& nodes, const PointSet& positions,
                                       const std::vector<double>& weights, const LayoutOptions& options,
                                       const std::vector<double>& aspect = {});

struct GlyphSlice {
  std::string word;
  EditAction action = EditAction::insert;
  std::size_t bundle = 0;
  double weight = 0.0;
  int frequency = 0;
  double angle_fraction = 0.0;
  double radius_fraction = 0.0;
  bool low_opacity = false;
};

struct GlyphSpec {
  int src_cluster = 0;
  int tgt_cluster = 0;
  std::vector<std::size_t> bundles;
  std::vector<NodeIndex> sources;
  std::vector<NodeIndex> targets;
  Point2 xy;
  std::vector<GlyphSlice> slices;
  std::vector<std::string> label_words;  // "+word", "-word", "~word", "+(word)", "-(word)"
};

std::string glyph_label(std::string_view word, EditAction action);

// One glyph per group of visible bundles that share the cluster pair and the
// exact set of (source, target) image pairs. The glyph sits at the mean of
// the distinct endpoint positions.
std::vector<GlyphSpec> place_glyphs(const std::vector<BundledEdge>& bundles,
                                    const std::vector<Edge>& edges,
                                    const std::vector<NodePlacement>& placements);

struct StageRange {
  int first = 1;  // 1-based step positions, inclusive
  int last = 1;

  friend bool operator==(const StageRange&, const StageRange&) = default;
};

enum class StageCommandKind { split, merge };
std::string_view to_string(StageCommandKind kind);

// split: a new stage begins at `step`. merge: the stage beginning at `step`
// joins the one before it.
struct StageCommand {
  StageCommandKind kind = StageCommandKind::split;
  int step = 0;

  friend bool operator==(const StageCommand&, const StageCommand&) = default;
};

class StageCommandError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct StageSegmentation {
  std::vector<StageRange> stages;
  std::vector<StageCommand> user_overrides;  // applied, in order
  std::vector<StageCommand> ignored;         // stale overrides that no longer apply

  std::set<int> boundaries() const;  // first step of every stage after the first
};

// Breaks before step i when similarity(i-1, i) < s_min, then replays the
// overrides. `consecutive` holds similarity(i, i+1) for i = 1..n-1.
// Stale overrides are skipped and reported in `ignored`.
StageSegmentation segment_stages(std::size_t step_count, const std::vector<double>& consecutive,
                                 double s_min,
                                 const std::vector<StageCommand>& overrides = {});

// Applies one more command; throws StageCommandError when it references a
// boundary or step that does not exist.
StageSegmentation apply_stage_command(const StageSegmentation& current, std::size_t step_count,
                                      const StageCommand& command);

enum class GroupingMode { cluster, stage };
std::string_view to_string(GroupingMode mode);
// Throws std::invalid_argument on unknown names.
GroupingMode parse_grouping_mode(std::string_view name);

enum class BubbleKind { cluster, stage, same_prompt };
std::string_view to_string(BubbleKind kind);

struct BubbleSpec {
  BubbleKind kind = BubbleKind::cluster;
  int group = 0;  // cluster id, stage index or step index
  std::vector<NodeIndex> members;

  bool dashed() const { return kind == BubbleKind::same_prompt; }
};

std::vector<BubbleSpec> compute_bubbles(const std::vector<int>& cluster_of_node,
                                        const StageSegmentation& stages,
                                        const std::vector<PromptStep>& steps, GroupingMode mode);

struct MiniMapDot {
  std::string step_id;
  int position = 1;
  std::size_t token_count = 0;
  double size = 0.0;  // token_count / max token count
  int order_shade = 0;
};

struct MiniMapArc {
  int from = 1;  // earlier position
  int to = 1;
  double similarity = 0.0;
  bool emphasized = false;
};

struct MiniMapModel {
  std::vector<MiniMapDot> dots;
  std::vector<MiniMapArc> arcs;
  std::vector<StageRange> stage_lines;
};

// Arcs join every pair at or above s_min. For each dot, the arc to its most
// similar earlier dot is emphasized; ties go to the most recent one.
MiniMapModel minimap_model(const std::vector<PromptStep>& steps, const std::vector<double>& similarity,
                           const StageSegmentation& stages, double s_min);

}  // namespace ivg
