#include "ivg/layout.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

namespace ivg {

std::string_view to_string(NodeMode mode) {
  return mode == NodeMode::thumbnail ? "thumbnail" : "rect";
}

std::string_view to_string(StageCommandKind kind) {
  return kind == StageCommandKind::split ? "split" : "merge";
}

std::string_view to_string(GroupingMode mode) {
  return mode == GroupingMode::cluster ? "cluster" : "stage";
}

GroupingMode parse_grouping_mode(std::string_view name) {
  if (name == "cluster") return GroupingMode::cluster;
  if (name == "stage") return GroupingMode::stage;
  throw std::invalid_argument("unknown grouping mode: " + std::string(name));
}

std::string_view to_string(BubbleKind kind) {
  switch (kind) {
    case BubbleKind::cluster: return "cluster";
    case BubbleKind::stage: return "stage";
    case BubbleKind::same_prompt: return "same_prompt";
  }
  return "unknown";
}

int order_shade(int order, int first, int last) {
  constexpr int lightest = 210;
  constexpr int darkest = 40;
  if (last <= first) return darkest;
  const double t = static_cast<double>(order - first) / static_cast<double>(last - first);
  return static_cast<int>(std::lround(lightest - t * (lightest - darkest)));
}

std::vector<NodePlacement> place_nodes(const std::vector<ImageNode>& nodes, const PointSet& positions,
                                       const std::vector<double>& weights, const LayoutOptions& options,
                                       const std::vector<double>& aspect) {
  const std::size_t n = nodes.size();
  std::vector<NodePlacement> out(n);
  if (n == 0) return out;

  double min_x = std::numeric_limits<double>::infinity(), max_x = -min_x;
  double min_y = min_x, max_y = -min_x;
  for (const auto& p : positions) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  const Viewport& vp = options.viewport;
  const double inner_w = std::max(0.0, vp.width - 2 * vp.margin);
  const double inner_h = std::max(0.0, vp.height - 2 * vp.margin);
  const double span_x = max_x - min_x;
  const double span_y = max_y - min_y;
  double scale = 0.0;
  if (span_x > 0 || span_y > 0) {
    scale = std::min(span_x > 0 ? inner_w / span_x : std::numeric_limits<double>::infinity(),
                     span_y > 0 ? inner_h / span_y : std::numeric_limits<double>::infinity());
  }
  const Point2 data_centre{(min_x + max_x) / 2, (min_y + max_y) / 2};
  const Point2 view_centre{vp.width / 2, vp.height / 2};

  int first_order = std::numeric_limits<int>::max(), last_order = std::numeric_limits<int>::min();
  for (const auto& node : nodes) {
    first_order = std::min(first_order, node.temporal_order);
    last_order = std::max(last_order, node.temporal_order);
  }

  for (std::size_t i = 0; i < n; ++i) {
    auto& p = out[i];
    p.node = i;
    p.xy = view_centre + (positions[i] - data_centre) * scale;
    p.order_shade = order_shade(nodes[i].temporal_order, first_order, last_order);
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (weights[a] != weights[b]) return weights[a] > weights[b];
    return nodes[a].temporal_order < nodes[b].temporal_order;
  });

  std::vector<Rect> thumbs;
  for (std::size_t i : order) {
    auto& p = out[i];
    const double ratio = i < aspect.size() && aspect[i] > 0 ? aspect[i] : 1.0;
    p.width = ratio >= 1.0 ? options.thumb_size : options.thumb_size * ratio;
    p.height = ratio >= 1.0 ? options.thumb_size / ratio : options.thumb_size;
    const Rect r = p.bounds();
    const bool clear = std::none_of(thumbs.begin(), thumbs.end(),
                                    [&](const Rect& t) { return t.intersects(r); });
    if (clear) {
      p.mode = NodeMode::thumbnail;
      thumbs.push_back(r);
    } else {
      p.mode = NodeMode::rect;
      p.width = options.rect_size;
      p.height = options.rect_size;
    }
  }
  return out;
}

std::string glyph_label(std::string_view word, EditAction action) {
  const std::string w(word);
  switch (action) {
    case EditAction::insert: return "+" + w;
    case EditAction::remove: return "-" + w;
    case EditAction::reorder: return "~" + w;
    case EditAction::increase_weight: return "+(" + w + ")";
    case EditAction::decrease_weight: return "-(" + w + ")";
  }
  return w;
}

std::vector<GlyphSpec> place_glyphs(const std::vector<BundledEdge>& bundles,
                                    const std::vector<Edge>& edges,
                                    const std::vector<NodePlacement>& placements) {
  using Endpoints = std::set<std::pair<NodeIndex, NodeIndex>>;
  using Key = std::tuple<int, int, Endpoints>;
  std::map<Key, std::vector<std::size_t>> groups;
  for (std::size_t b = 0; b < bundles.size(); ++b) {
    if (!bundles[b].visible) continue;
    Endpoints ends;
    for (std::size_t e : bundles[b].members) ends.emplace(edges[e].src, edges[e].tgt);
    groups[{bundles[b].src_cluster, bundles[b].tgt_cluster, std::move(ends)}].push_back(b);
  }

  std::vector<GlyphSpec> glyphs;
  for (const auto& [key, members] : groups) {
    GlyphSpec g;
    g.src_cluster = std::get<0>(key);
    g.tgt_cluster = std::get<1>(key);
    g.bundles = members;

    std::set<NodeIndex> sources, targets, all;
    for (const auto& [s, t] : std::get<2>(key)) {
      sources.insert(s);
      targets.insert(t);
      all.insert(s);
      all.insert(t);
    }
    g.sources.assign(sources.begin(), sources.end());
    g.targets.assign(targets.begin(), targets.end());
    Point2 sum;
    for (NodeIndex v : all) sum = sum + placements.at(v).xy;
    g.xy = sum * (1.0 / static_cast<double>(all.size()));

    int total = 0;
    double max_weight = 0.0;
    std::vector<double> weights;
    for (std::size_t b : members) {
      total += static_cast<int>(bundles[b].members.size());
      max_weight = std::max(max_weight, bundles[b].weight);
      weights.push_back(bundles[b].weight);
    }
    std::sort(weights.begin(), weights.end());
    const std::size_t k = weights.size();
    const double median = k % 2 ? weights[k / 2] : (weights[k / 2 - 1] + weights[k / 2]) / 2;

    for (std::size_t b : members) {
      const auto& bundle = bundles[b];
      GlyphSlice s;
      s.word = bundle.word;
      s.action = bundle.action;
      s.bundle = b;
      s.weight = bundle.weight;
      s.frequency = static_cast<int>(bundle.members.size());
      s.angle_fraction = static_cast<double>(s.frequency) / static_cast<double>(total);
      s.radius_fraction = max_weight > 0 ? bundle.weight / max_weight : 1.0;
      s.low_opacity = bundle.weight < median;
      g.label_words.push_back(glyph_label(bundle.word, bundle.action));
      g.slices.push_back(std::move(s));
    }
    glyphs.push_back(std::move(g));
  }
  return glyphs;
}

std::set<int> StageSegmentation::boundaries() const {
  std::set<int> out;
  for (std::size_t i = 1; i < stages.size(); ++i) out.insert(stages[i].first);
  return out;
}

namespace {

std::vector<StageRange> ranges_from(const std::set<int>& boundaries, int n) {
  std::vector<StageRange> out;
  if (n <= 0) return out;
  int first = 1;
  for (int b : boundaries) {
    out.push_back({first, b - 1});
    first = b;
  }
  out.push_back({first, n});
  return out;
}

void apply(std::set<int>& boundaries, int n, const StageCommand& cmd) {
  if (cmd.step < 2 || cmd.step > n) {
    throw StageCommandError("step " + std::to_string(cmd.step) + " has no boundary before it");
  }
  if (cmd.kind == StageCommandKind::split) {
    if (!boundaries.insert(cmd.step).second) {
      throw StageCommandError("a stage already begins at step " + std::to_string(cmd.step));
    }
  } else if (boundaries.erase(cmd.step) == 0) {
    throw StageCommandError("no stage boundary before step " + std::to_string(cmd.step));
  }
}

}  // namespace

StageSegmentation segment_stages(std::size_t step_count, const std::vector<double>& consecutive,
                                 double s_min, const std::vector<StageCommand>& overrides) {
  const int n = static_cast<int>(step_count);
  if (step_count > 0 && consecutive.size() + 1 < step_count) {
    throw std::invalid_argument("segment_stages: missing consecutive similarities");
  }
  std::set<int> boundaries;
  for (int i = 2; i <= n; ++i) {
    if (consecutive[static_cast<std::size_t>(i - 2)] < s_min) boundaries.insert(i);
  }
  StageSegmentation seg;
  for (const auto& cmd : overrides) {
    try {
      apply(boundaries, n, cmd);
      seg.user_overrides.push_back(cmd);
    } catch (const StageCommandError&) {
      seg.ignored.push_back(cmd);
    }
  }
  seg.stages = ranges_from(boundaries, n);
  return seg;
}

StageSegmentation apply_stage_command(const StageSegmentation& current, std::size_t step_count,
                                      const StageCommand& command) {
  const int n = static_cast<int>(step_count);
  std::set<int> boundaries = current.boundaries();
  apply(boundaries, n, command);
  StageSegmentation next = current;
  next.user_overrides.push_back(command);
  next.stages = ranges_from(boundaries, n);
  return next;
}

std::vector<BubbleSpec> compute_bubbles(const std::vector<int>& cluster_of_node,
                                        const StageSegmentation& stages,
                                        const std::vector<PromptStep>& steps, GroupingMode mode) {
  std::vector<BubbleSpec> out;
  if (mode == GroupingMode::cluster) {
    std::map<int, std::vector<NodeIndex>> members;
    for (NodeIndex v = 0; v < cluster_of_node.size(); ++v) members[cluster_of_node[v]].push_back(v);
    for (auto& [cluster, nodes] : members) out.push_back({BubbleKind::cluster, cluster, std::move(nodes)});
  } else {
    for (std::size_t s = 0; s < stages.stages.size(); ++s) {
      BubbleSpec b{BubbleKind::stage, static_cast<int>(s), {}};
      const auto& range = stages.stages[s];
      for (int pos = range.first; pos <= range.last; ++pos) {
        const auto idx = static_cast<std::size_t>(pos - 1);
        if (idx < steps.size()) {
          b.members.insert(b.members.end(), steps[idx].images.begin(), steps[idx].images.end());
        }
      }
      if (!b.members.empty()) out.push_back(std::move(b));
    }
  }
  for (std::size_t s = 0; s < steps.size(); ++s) {
    std::set<int> clusters;
    for (NodeIndex v : steps[s].images) clusters.insert(cluster_of_node.at(v));
    if (clusters.size() >= 2) out.push_back({BubbleKind::same_prompt, static_cast<int>(s), steps[s].images});
  }
  return out;
}

MiniMapModel minimap_model(const std::vector<PromptStep>& steps, const std::vector<double>& similarity,
                           const StageSegmentation& stages, double s_min) {
  MiniMapModel model;
  const std::size_t n = steps.size();
  std::size_t max_tokens = 0;
  for (const auto& s : steps) max_tokens = std::max(max_tokens, s.tokens.size());
  for (std::size_t i = 0; i < n; ++i) {
    MiniMapDot dot;
    dot.step_id = steps[i].step_id;
    dot.position = static_cast<int>(i + 1);
    dot.token_count = steps[i].tokens.size();
    dot.size = max_tokens ? static_cast<double>(dot.token_count) / static_cast<double>(max_tokens) : 0.0;
    dot.order_shade = order_shade(static_cast<int>(i + 1), 1, static_cast<int>(n));
    model.dots.push_back(std::move(dot));
  }
  for (std::size_t j = 0; j < n; ++j) {
    std::optional<std::size_t> emphasized;
    double best = -1.0;
    for (std::size_t i = 0; i < j; ++i) {
      const double sim = similarity[i * n + j];
      if (sim < s_min) continue;
      model.arcs.push_back({static_cast<int>(i + 1), static_cast<int>(j + 1), sim, false});
      if (sim >= best) {
        best = sim;
        emphasized = model.arcs.size() - 1;
      }
    }
    if (emphasized) model.arcs[*emphasized].emphasized = true;
  }
  model.stage_lines = stages.stages;
  return model;
}

}  // namespace ivg
