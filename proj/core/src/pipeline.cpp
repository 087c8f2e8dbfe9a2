#include "ivg/pipeline.hpp"

#include <charconv>
#include <cmath>
#include <set>

#include "ivg/png.hpp"
#include "ivg/procrustes.hpp"

namespace ivg {

namespace {

std::string format_double(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

double parse_double(const std::string& key, const std::string& value) {
  double out = 0.0;
  auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || end != value.data() + value.size() || !std::isfinite(out)) {
    throw ParamError(key + " must be a number, got '" + value + "'");
  }
  return out;
}

template <typename Int>
Int parse_int(const std::string& key, const std::string& value) {
  Int out = 0;
  auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || end != value.data() + value.size()) {
    throw ParamError(key + " must be an integer, got '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ParamError(key + " must be true or false, got '" + value + "'");
}

struct ParsedSession {
  PhraseTable phrases;
  std::vector<PromptTokens> prompts;
};

ParsedSession parse_session(const SessionSnapshot& snapshot) {
  ParsedSession out;
  std::vector<PromptTokens> plain;
  plain.reserve(snapshot.steps.size());
  for (const auto& step : snapshot.steps) plain.push_back(parse_prompt(step.prompt));
  out.phrases = detect_phrases(plain);
  if (out.phrases.empty()) {
    out.prompts = std::move(plain);
  } else {
    for (const auto& step : snapshot.steps) out.prompts.push_back(parse_prompt(step.prompt, out.phrases));
  }
  return out;
}

// p' = s * p * R + t
Point2 apply_similarity(const ProcrustesResult& fit, const Point2& p) {
  const double x = p.x * fit.rotation[0][0] + p.y * fit.rotation[1][0];
  const double y = p.x * fit.rotation[0][1] + p.y * fit.rotation[1][1];
  return {fit.scale * x + fit.translation.x, fit.scale * y + fit.translation.y};
}

bool coincident(const PointSet& pts) {
  for (const auto& p : pts) {
    if (!(p == pts.front())) return false;
  }
  return true;
}

}  // namespace

std::vector<PromptTokens> parse_session_prompts(const SessionSnapshot& snapshot) {
  return parse_session(snapshot).prompts;
}

void BuildParams::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ParamError("alpha must be in [0, 1]");
  if (!(graph.s_min >= 0.0 && graph.s_min <= 1.0)) throw ParamError("s_min must be in [0, 1]");
  if (graph.w_min && !(*graph.w_min >= 0.0 && std::isfinite(*graph.w_min))) {
    throw ParamError("w_min must be a non-negative number");
  }
  if (graph.n_e < 1) throw ParamError("n_e must be at least 1");
  if (graph.redistribution_passes < 0 || graph.redistribution_passes > 64) {
    throw ParamError("passes must be in [0, 64]");
  }
  if (!(cluster_distance > 0.0 && std::isfinite(cluster_distance))) {
    throw ParamError("cluster_distance must be a positive number");
  }
  const auto& vp = layout.viewport;
  if (!(vp.width > 0 && vp.height > 0 && vp.margin >= 0 && 2 * vp.margin < std::min(vp.width, vp.height))) {
    throw ParamError("viewport must be positive and larger than twice its margin");
  }
  if (!(layout.thumb_size > 0 && layout.rect_size > 0)) throw ParamError("node sizes must be positive");
}

BuildParams parse_build_params(const std::multimap<std::string, std::string>& query, BuildParams params) {
  for (const auto& [key, value] : query) {
    if (key == "alpha") {
      params.alpha = parse_double(key, value);
    } else if (key == "s_min") {
      params.graph.s_min = parse_double(key, value);
    } else if (key == "w_min") {
      if (value.empty() || value == "auto") {
        params.graph.w_min.reset();
      } else {
        params.graph.w_min = parse_double(key, value);
      }
    } else if (key == "n_e") {
      params.graph.n_e = parse_int<int>(key, value);
    } else if (key == "passes") {
      params.graph.redistribution_passes = parse_int<int>(key, value);
    } else if (key == "cluster_distance") {
      params.cluster_distance = parse_double(key, value);
    } else if (key == "grouping") {
      try {
        params.grouping = parse_grouping_mode(value);
      } catch (const std::invalid_argument& e) {
        throw ParamError(e.what());
      }
    } else if (key == "seed") {
      params.seed = parse_int<std::uint64_t>(key, value);
    } else if (key == "allow_degraded") {
      params.allow_degraded = parse_bool(key, value);
    } else {
      throw ParamError("unknown parameter '" + key + "'");
    }
  }
  params.validate();
  return params;
}

std::string params_key(const BuildParams& p) {
  std::string key = "alpha=" + format_double(p.alpha) + ";s_min=" + format_double(p.graph.s_min) +
                    ";w_min=" + (p.graph.w_min ? format_double(*p.graph.w_min) : "auto") +
                    ";n_e=" + std::to_string(p.graph.n_e) +
                    ";passes=" + std::to_string(p.graph.redistribution_passes) +
                    ";cluster_distance=" + format_double(p.cluster_distance) +
                    ";grouping=" + std::string(to_string(p.grouping)) + ";seed=" + std::to_string(p.seed) +
                    ";viewport=" + format_double(p.layout.viewport.width) + "x" +
                    format_double(p.layout.viewport.height) + "/" + format_double(p.layout.viewport.margin) +
                    ";thumb=" + format_double(p.layout.thumb_size) + ";rect=" + format_double(p.layout.rect_size) +
                    ";degraded=" + (p.allow_degraded ? "1" : "0");
  return key;
}

std::vector<double> consecutive_similarities(const SessionSnapshot& snapshot) {
  const ParsedSession parsed = parse_session(snapshot);
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < parsed.prompts.size(); ++i) {
    out.push_back(jaccard_similarity(parsed.prompts[i], parsed.prompts[i + 1]));
  }
  return out;
}

StageSegmentation session_stages(const SessionSnapshot& snapshot, double s_min) {
  return segment_stages(snapshot.steps.size(), consecutive_similarities(snapshot), s_min, snapshot.overrides);
}

std::shared_ptr<const GraphLayout> build_layout(const SessionSnapshot& snapshot, EmbeddingProvider& provider,
                                                EmbeddingCache* cache, const BuildParams& params,
                                                const GraphLayout* previous) {
  params.validate();
  auto out = std::make_shared<GraphLayout>();
  GraphLayout& g = *out;
  g.session_id = snapshot.session.id;
  g.version = snapshot.version;
  g.params = params;
  g.records = snapshot.steps;

  ParsedSession parsed = parse_session(snapshot);
  g.phrases = std::move(parsed.phrases);
  for (std::size_t s = 0; s < snapshot.steps.size(); ++s) {
    const StepRecord& record = snapshot.steps[s];
    for (const auto& w : parsed.prompts[s].warnings) {
      g.warnings.push_back(record.id + ": " + w.message);
    }
    PromptStep step;
    step.step_id = record.id;
    step.order = record.order;
    step.tokens = std::move(parsed.prompts[s]);
    for (std::size_t i = 0; i < record.image_ids.size(); ++i) {
      step.images.push_back(g.nodes.size());
      g.nodes.push_back({record.image_ids[i], record.id, record.order, s});
      g.node_ids.push_back(record.id + ":" + std::to_string(i));
    }
    g.steps.push_back(std::move(step));
  }
  const std::size_t n = g.nodes.size();

  // Embeddings.
  std::map<std::string, std::shared_ptr<const Bytes>> bytes_by_id;
  std::vector<EmbeddingRecord> records;
  records.reserve(n);
  for (const auto& node : g.nodes) {
    auto& bytes = bytes_by_id[node.image_id];
    if (!bytes) bytes = std::make_shared<const Bytes>(snapshot.read_asset(node.image_id));
    records.push_back({node.image_id, snapshot.steps[node.step_index].prompt, bytes});
    const auto info = read_png_info(*bytes);
    g.aspect.push_back(info && info->height > 0 ? static_cast<double>(info->width) / info->height : 1.0);
  }
  EmbedOptions embed_options;
  embed_options.allow_degraded = params.allow_degraded;
  EmbedResult embedded = embed_records(records, provider, cache, embed_options);
  if (!embedded.ok()) {
    std::string message = "embedding failed for " + std::to_string(embedded.errors.size()) + " record(s)";
    if (!embedded.errors.empty()) message += ": " + embedded.errors.front().message;
    throw EmbeddingError(message);
  }
  g.degraded = embedded.degraded;
  for (const auto& e : embedded.errors) g.warnings.push_back("embedding " + e.image_id + ": " + e.message);

  // Projection, alignment and combination.
  std::vector<Vector> text_vecs, image_vecs;
  for (auto& e : embedded.embeddings) {
    text_vecs.push_back(std::move(e.text_vec));
    image_vecs.push_back(std::move(e.image_vec));
  }
  std::vector<std::optional<Point2>> init(n);
  bool seeded = false;
  if (previous) {
    std::map<std::string, Point2> prior;
    for (std::size_t i = 0; i < previous->node_ids.size(); ++i) {
      prior[previous->node_ids[i]] = previous->projection.combined_xy[i];
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (auto it = prior.find(g.node_ids[i]); it != prior.end()) {
        init[i] = it->second;
        seeded = true;
      }
    }
  }
  ProjectionOptions popts;
  popts.seed = params.seed;
  const auto* init_ptr = seeded ? &init : nullptr;
  PointSet text_xy = standardize(project(text_vecs, popts, init_ptr));
  PointSet image_xy = standardize(project(image_vecs, popts, init_ptr));

  Projection2D& proj = g.projection;
  proj.alpha = params.alpha;
  if (n >= 2 && !coincident(image_xy)) {
    // Both sets are standardized, so only the orthogonal part of the fit is
    // applied; the least-squares scale would shrink text toward the centre
    // when the two spaces agree poorly.
    ProcrustesResult fit = procrustes_align(text_xy, image_xy);
    if (!fit.degenerate_source) {
      fit.scale = 1.0;
      fit.translation = {};
      for (auto& p : text_xy) p = apply_similarity(fit, p);
    }
    proj.disparity = fit.disparity;
  } else if (n >= 2) {
    proj.disparity = 1.0;
  }
  proj.text_xy = std::move(text_xy);
  proj.image_xy = std::move(image_xy);
  proj.combined_xy = combine(proj.text_xy, proj.image_xy, params.alpha);

  g.clusters = n ? cluster_average_linkage(proj.combined_xy, params.cluster_distance) : ClusterAssignment{};
  g.clusters.cluster_distance = params.cluster_distance;

  // Keep shared nodes where they were in the previous build.
  if (seeded) {
    PointSet from, to;
    for (std::size_t i = 0; i < n; ++i) {
      if (init[i]) {
        from.push_back(proj.combined_xy[i]);
        to.push_back(*init[i]);
      }
    }
    if (from.size() >= 2 && !coincident(to) && !coincident(from)) {
      const ProcrustesResult fit = procrustes_align(from, to);
      for (PointSet* set : {&proj.text_xy, &proj.image_xy, &proj.combined_xy}) {
        for (auto& p : *set) p = apply_similarity(fit, p);
      }
    }
  }

  // Edges.
  g.similarity = similarity_matrix(g.steps);
  g.pairs = compare_similar_pairs(g.steps, g.similarity, params.graph.s_min);
  g.edges = derive_edges(g.steps, g.pairs, params.graph);
  g.bundles = bundle(g.edges, g.clusters.labels);
  redistribute(g.edges, g.bundles, params.graph.redistribution_passes);
  g.merged = merge_equal(g.edges);
  g.filter = filter(g.bundles, params.graph);
  g.node_weights = node_weights(n, g.edges);

  // Layout.
  g.placements = place_nodes(g.nodes, proj.combined_xy, g.node_weights, params.layout, g.aspect);
  g.glyphs = place_glyphs(g.bundles, g.edges, g.placements);
  std::vector<double> consecutive;
  for (std::size_t i = 0; i + 1 < g.steps.size(); ++i) {
    consecutive.push_back(g.similarity[i * g.steps.size() + i + 1]);
  }
  g.stages = segment_stages(g.steps.size(), consecutive, params.graph.s_min, snapshot.overrides);
  for (const auto& cmd : g.stages.ignored) {
    g.warnings.push_back("ignored stage override " + std::string(to_string(cmd.kind)) + " at step " +
                         std::to_string(cmd.step));
  }
  g.bubbles = compute_bubbles(g.clusters.labels, g.stages, g.steps, params.grouping);
  g.minimap = minimap_model(g.steps, g.similarity, g.stages, params.graph.s_min);
  return out;
}

}  // namespace ivg
