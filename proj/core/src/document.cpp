#include "ivg/document.hpp"

#include <set>

namespace ivg {

using nlohmann::json;

namespace {

json point(const Point2& p) { return json::array({p.x, p.y}); }

json tokens_to_json(const PromptTokens& tokens) {
  json out = json::array();
  for (const auto& t : tokens.tokens) {
    out.push_back({{"text", t.text}, {"weight", t.weight}, {"span", {t.span.begin, t.span.end}}});
  }
  return out;
}

json warnings_to_json(const PromptTokens& tokens) {
  json out = json::array();
  for (const auto& w : tokens.warnings) {
    out.push_back({{"message", w.message}, {"span", {w.span.begin, w.span.end}}});
  }
  return out;
}

json stage_command_to_json(const StageCommand& cmd) {
  return {{"command", to_string(cmd.kind)}, {"step", cmd.step}};
}

}  // namespace

std::string_view action_color(EditAction action) {
  switch (action) {
    case EditAction::insert:
    case EditAction::increase_weight: return "#466E8F";
    case EditAction::remove:
    case EditAction::decrease_weight: return "#CD3033";
    case EditAction::reorder: return "#57B28F";
  }
  return "#888888";
}

json params_to_json(const BuildParams& p) {
  return {
      {"alpha", p.alpha},
      {"s_min", p.graph.s_min},
      {"w_min", p.graph.w_min ? json(*p.graph.w_min) : json(nullptr)},
      {"n_e", p.graph.n_e},
      {"passes", p.graph.redistribution_passes},
      {"cluster_distance", p.cluster_distance},
      {"grouping", to_string(p.grouping)},
      {"seed", p.seed},
      {"allow_degraded", p.allow_degraded},
      {"viewport",
       {{"width", p.layout.viewport.width},
        {"height", p.layout.viewport.height},
        {"margin", p.layout.viewport.margin}}},
      {"thumb_size", p.layout.thumb_size},
      {"rect_size", p.layout.rect_size},
  };
}

json edit_op_to_json(const EditOp& op) {
  json out = {{"word", op.word}, {"action", to_string(op.action)}, {"color", action_color(op.action)}};
  out["bold"] = op.action == EditAction::insert || op.action == EditAction::remove;
  if (op.weight_before) out["weight_before"] = *op.weight_before;
  if (op.weight_after) out["weight_after"] = *op.weight_after;
  if (op.src_index) out["src_index"] = *op.src_index;
  if (op.tgt_index) out["tgt_index"] = *op.tgt_index;
  return out;
}

json stages_to_json(const StageSegmentation& stages) {
  json out = {{"stages", json::array()}, {"boundaries", json::array()},
              {"overrides", json::array()}, {"ignored", json::array()}};
  for (const auto& r : stages.stages) out["stages"].push_back({{"first", r.first}, {"last", r.last}});
  for (int b : stages.boundaries()) out["boundaries"].push_back(b);
  for (const auto& c : stages.user_overrides) out["overrides"].push_back(stage_command_to_json(c));
  for (const auto& c : stages.ignored) out["ignored"].push_back(stage_command_to_json(c));
  return out;
}

json session_to_json(const Session& s) {
  return {{"id", s.id}, {"title", s.title}, {"created_at", s.created_at}, {"step_count", s.step_count}};
}

json step_to_json(const StepRecord& step) {
  return {{"id", step.id},
          {"session_id", step.session_id},
          {"order", step.order},
          {"prompt", step.prompt},
          {"params",
           {{"seed", step.params.seed},
            {"batch_size", step.params.batch_size},
            {"width", step.params.width},
            {"height", step.params.height},
            {"model", step.params.model}}},
          {"image_ids", step.image_ids},
          {"created_at", step.created_at}};
}

json layout_document(const GraphLayout& g) {
  json doc;
  doc["schema"] = kLayoutSchema;
  doc["session"] = {{"id", g.session_id}, {"version", g.version}};
  doc["params"] = params_to_json(g.params);
  doc["filter"] = {{"mode", g.filter.automatic ? "auto" : "manual"},
                   {"effective_w_min", g.filter.effective_w_min},
                   {"visible_bundles", g.filter.visible_count}};
  doc["effective_w_min"] = g.filter.effective_w_min;
  doc["viewport"] = {{"width", g.params.layout.viewport.width}, {"height", g.params.layout.viewport.height}};

  json steps = json::array();
  for (std::size_t s = 0; s < g.steps.size(); ++s) {
    json node_ids = json::array();
    for (NodeIndex v : g.steps[s].images) node_ids.push_back(g.node_ids[v]);
    steps.push_back({{"id", g.steps[s].step_id},
                     {"order", g.steps[s].order},
                     {"prompt", g.records[s].prompt},
                     {"tokens", tokens_to_json(g.steps[s].tokens)},
                     {"warnings", warnings_to_json(g.steps[s].tokens)},
                     {"nodes", std::move(node_ids)}});
  }
  doc["steps"] = std::move(steps);

  json phrases = json::array();
  for (const auto& unit : g.phrases.units()) phrases.push_back(join_words(unit));
  doc["phrases"] = std::move(phrases);

  json nodes = json::array();
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const auto& node = g.nodes[i];
    const auto& place = g.placements[i];
    nodes.push_back({{"id", g.node_ids[i]},
                     {"image_id", node.image_id},
                     {"asset", "assets/" + node.image_id + ".png"},
                     {"step_id", node.step_id},
                     {"order", node.temporal_order},
                     {"cluster", g.clusters.labels[i]},
                     {"x", place.xy.x},
                     {"y", place.xy.y},
                     {"mode", to_string(place.mode)},
                     {"width", place.width},
                     {"height", place.height},
                     {"shade", place.order_shade},
                     {"weight", g.node_weights[i]},
                     {"text_xy", point(g.projection.text_xy[i])},
                     {"image_xy", point(g.projection.image_xy[i])},
                     {"combined_xy", point(g.projection.combined_xy[i])}});
  }
  doc["nodes"] = std::move(nodes);

  json edges = json::array();
  for (const auto& e : g.edges) {
    edges.push_back({{"source", g.node_ids[e.src]},
                     {"target", g.node_ids[e.tgt]},
                     {"word", e.word},
                     {"action", to_string(e.action)},
                     {"weight", e.weight},
                     {"bundle", e.bundle},
                     {"visible", g.bundles[e.bundle].visible}});
  }
  doc["edges"] = std::move(edges);

  json merged = json::array();
  for (const auto& m : g.merged) {
    json mods = json::array();
    for (const auto& mod : m.modifications) {
      mods.push_back({{"word", mod.word},
                      {"action", to_string(mod.action)},
                      {"color", action_color(mod.action)},
                      {"weight", mod.weight_share},
                      {"frequency", mod.frequency}});
    }
    std::set<std::size_t> bundle_ids;
    bool visible = false;
    for (std::size_t e : m.edges) {
      bundle_ids.insert(g.edges[e].bundle);
      visible = visible || g.bundles[g.edges[e].bundle].visible;
    }
    merged.push_back({{"source", g.node_ids[m.src]},
                      {"target", g.node_ids[m.tgt]},
                      {"weight", m.weight()},
                      {"merged", m.merged()},
                      {"modifications", std::move(mods)},
                      {"edges", m.edges},
                      {"bundles", bundle_ids},
                      {"visible", visible}});
  }
  doc["merged_edges"] = std::move(merged);

  json bundles = json::array();
  for (std::size_t b = 0; b < g.bundles.size(); ++b) {
    const auto& bundle = g.bundles[b];
    bundles.push_back({{"id", b},
                       {"word", bundle.word},
                       {"action", to_string(bundle.action)},
                       {"color", action_color(bundle.action)},
                       {"label", glyph_label(bundle.word, bundle.action)},
                       {"src_cluster", bundle.src_cluster},
                       {"tgt_cluster", bundle.tgt_cluster},
                       {"weight", bundle.weight},
                       {"visible", bundle.visible},
                       {"edges", bundle.members}});
  }
  doc["bundles"] = std::move(bundles);

  json glyphs = json::array();
  for (const auto& glyph : g.glyphs) {
    json slices = json::array();
    for (const auto& s : glyph.slices) {
      slices.push_back({{"word", s.word},
                        {"action", to_string(s.action)},
                        {"color", action_color(s.action)},
                        {"bundle", s.bundle},
                        {"weight", s.weight},
                        {"frequency", s.frequency},
                        {"angle_fraction", s.angle_fraction},
                        {"radius_fraction", s.radius_fraction},
                        {"low_opacity", s.low_opacity}});
    }
    json sources = json::array(), targets = json::array();
    for (NodeIndex v : glyph.sources) sources.push_back(g.node_ids[v]);
    for (NodeIndex v : glyph.targets) targets.push_back(g.node_ids[v]);
    glyphs.push_back({{"x", glyph.xy.x},
                      {"y", glyph.xy.y},
                      {"src_cluster", glyph.src_cluster},
                      {"tgt_cluster", glyph.tgt_cluster},
                      {"bundles", glyph.bundles},
                      {"sources", std::move(sources)},
                      {"targets", std::move(targets)},
                      {"labels", glyph.label_words},
                      {"slices", std::move(slices)}});
  }
  doc["glyphs"] = std::move(glyphs);

  json bubbles = json::array();
  for (const auto& bubble : g.bubbles) {
    json members = json::array();
    for (NodeIndex v : bubble.members) members.push_back(g.node_ids[v]);
    bubbles.push_back({{"kind", to_string(bubble.kind)},
                       {"group", bubble.group},
                       {"dashed", bubble.dashed()},
                       {"members", std::move(members)}});
  }
  doc["bubbles"] = std::move(bubbles);

  doc["stages"] = stages_to_json(g.stages);

  json dots = json::array(), arcs = json::array(), lines = json::array();
  for (const auto& d : g.minimap.dots) {
    dots.push_back({{"step_id", d.step_id},
                    {"position", d.position},
                    {"token_count", d.token_count},
                    {"size", d.size},
                    {"shade", d.order_shade}});
  }
  for (const auto& a : g.minimap.arcs) {
    arcs.push_back({{"from", a.from}, {"to", a.to}, {"similarity", a.similarity}, {"emphasized", a.emphasized}});
  }
  for (const auto& r : g.minimap.stage_lines) lines.push_back({{"first", r.first}, {"last", r.last}});
  doc["minimap"] = {{"dots", std::move(dots)}, {"arcs", std::move(arcs)}, {"stage_lines", std::move(lines)}};

  doc["projection"] = {{"alpha", g.projection.alpha},
                       {"disparity", g.projection.disparity},
                       {"cluster_count", g.clusters.cluster_count},
                       {"cluster_distance", g.clusters.cluster_distance}};
  doc["degraded"] = g.degraded;
  doc["warnings"] = g.warnings;
  return doc;
}

json history_document(const SessionSnapshot& snapshot, double s_min) {
  const std::vector<PromptTokens> prompts = parse_session_prompts(snapshot);
  json steps = json::array();
  for (std::size_t i = 0; i < snapshot.steps.size(); ++i) {
    json step = step_to_json(snapshot.steps[i]);
    step["tokens"] = tokens_to_json(prompts[i]);
    step["warnings"] = warnings_to_json(prompts[i]);
    steps.push_back(std::move(step));
  }
  json pairs = json::array();
  for (std::size_t i = 0; i + 1 < prompts.size(); ++i) {
    const double sim = jaccard_similarity(prompts[i], prompts[i + 1]);
    json pair = {{"from", snapshot.steps[i].id}, {"to", snapshot.steps[i + 1].id},
                 {"similarity", sim}, {"similar", sim >= s_min}};
    if (sim >= s_min) {
      json ops = json::array();
      for (const auto& op : diff_prompts(prompts[i], prompts[i + 1]).ops) ops.push_back(edit_op_to_json(op));
      pair["ops"] = std::move(ops);
    }
    pairs.push_back(std::move(pair));
  }
  return {{"session", session_to_json(snapshot.session)},
          {"version", snapshot.version},
          {"s_min", s_min},
          {"steps", std::move(steps)},
          {"pairs", std::move(pairs)}};
}

StageCommand stage_command_from_json(const json& body) {
  if (!body.is_object()) throw StageCommandError("stage command must be a JSON object");
  if (!body.contains("command") || !body["command"].is_string()) {
    throw StageCommandError("stage command needs a 'command' of split or merge");
  }
  if (!body.contains("step") || !body["step"].is_number_integer()) {
    throw StageCommandError("stage command needs an integer 'step'");
  }
  const std::string kind = body["command"].get<std::string>();
  StageCommand cmd;
  if (kind == "split") {
    cmd.kind = StageCommandKind::split;
  } else if (kind == "merge") {
    cmd.kind = StageCommandKind::merge;
  } else {
    throw StageCommandError("unknown stage command '" + kind + "'");
  }
  cmd.step = body["step"].get<int>();
  return cmd;
}

}  // namespace ivg
