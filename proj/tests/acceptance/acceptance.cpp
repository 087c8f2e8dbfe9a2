// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 when any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "ivg/clustering.hpp"
#include "ivg/diff.hpp"
#include "ivg/document.hpp"
#include "ivg/graph.hpp"
#include "ivg/layout.hpp"
#include "ivg/pipeline.hpp"
#include "ivg/procrustes.hpp"
#include "ivg/prompt.hpp"
#include "ivg/projection.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"
#include "tempdir.hpp"

using namespace ivg;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;
};

int failures = 0;

void report(const char* name, const std::function<Outcome()>& criterion) {
  Outcome out;
  try {
    out = criterion();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  std::printf("%s %s: %s\n", out.pass ? "PASS" : "FAIL", name, out.detail.c_str());
  std::fflush(stdout);
  if (!out.pass) ++failures;
}

template <typename... Args>
std::string fmt(Args&&... args) {
  std::ostringstream os;
  (os << ... << args);
  return os.str();
}

Outcome diff_oracle() {
  std::mt19937_64 rng(20240601);
  const std::vector<std::string> alphabet = {"a", "b", "c", "d"};
  const int cases = 5000;
  int agree = 0;
  for (int i = 0; i < cases; ++i) {
    std::vector<std::string> x, y;
    const auto lx = rng() % 9, ly = rng() % 9;
    for (std::size_t k = 0; k < lx; ++k) x.push_back(alphabet[rng() % 4]);
    for (std::size_t k = 0; k < ly; ++k) y.push_back(alphabet[rng() % 4]);
    if (myers_align(x, y).cost() == oracle::indel_distance(x, y)) ++agree;
  }
  return {agree == cases, fmt(agree, "/", cases, " sequences agree with the exhaustive edit distance")};
}

Outcome weight_conservation() {
  std::mt19937_64 rng(7);
  const int sessions = 200;
  double worst_initial = 0.0, worst_redistributed = 0.0;
  std::size_t prompt_pairs = 0, image_pairs = 0;
  for (int s = 0; s < sessions; ++s) {
    auto steps = synthetic::random_steps(rng, 4 + rng() % 14, 5 + rng() % 4, 6, 4);
    GraphParams params;
    params.s_min = 0.3 + 0.05 * static_cast<double>(rng() % 8);
    auto pairs = compare_similar_pairs(steps, similarity_matrix(steps), params.s_min);
    auto edges = derive_edges(steps, pairs, params);

    std::map<NodeIndex, std::size_t> step_of;
    for (std::size_t i = 0; i < steps.size(); ++i) {
      for (auto img : steps[i].images) step_of[img] = i;
    }
    std::map<std::pair<std::size_t, std::size_t>, double> by_prompt;
    for (const auto& e : edges) by_prompt[{step_of[e.src], step_of[e.tgt]}] += e.weight;
    for (const auto& [k, sum] : by_prompt) worst_initial = std::max(worst_initial, std::abs(sum - 1.0));
    prompt_pairs += by_prompt.size();

    std::vector<int> clusters(synthetic::node_count(steps));
    for (auto& c : clusters) c = static_cast<int>(rng() % 4);
    auto bundles = bundle(edges, clusters);
    redistribute(edges, bundles, 1);
    std::map<std::pair<NodeIndex, NodeIndex>, double> by_image;
    for (const auto& e : edges) by_image[{e.src, e.tgt}] += e.weight;
    for (const auto& [k, sum] : by_image) worst_redistributed = std::max(worst_redistributed, std::abs(sum - 1.0));
    image_pairs += by_image.size();
  }
  const bool pass = worst_initial <= 1e-9 && worst_redistributed <= 1e-9 && prompt_pairs > 0;
  return {pass, fmt(sessions, " sessions, ", prompt_pairs, " prompt pairs (max error ", worst_initial, "), ",
                    image_pairs, " image pairs after redistribution (max error ", worst_redistributed, ")")};
}

Outcome worked_example() {
  auto step = [](const char* id, int order, const char* prompt, NodeIndex image) {
    return PromptStep{id, order, parse_prompt(prompt), {image}};
  };
  std::vector<PromptStep> steps = {step("p1", 1, "cat", 0), step("p2", 2, "white cat", 1),
                                   step("p3", 3, "white cat, hd", 2)};
  GraphParams params;
  params.s_min = 1.0 / 3;  // jaccard(cat, white cat hd) = 1/3
  auto pairs = compare_similar_pairs(steps, similarity_matrix(steps), params.s_min);
  auto edges = derive_edges(steps, pairs, params);
  auto bundles = bundle(edges, {0, 1, 1});
  redistribute(edges, bundles, 1);

  auto edge = [&](const char* word, NodeIndex s, NodeIndex t) {
    for (const auto& e : edges) {
      if (e.word == word && e.src == s && e.tgt == t) return e.weight;
    }
    return std::nan("");
  };
  auto bundle_weight = [&](const char* word, int cs, int ct) {
    for (const auto& b : bundles) {
      if (b.word == word && b.src_cluster == cs && b.tgt_cluster == ct) return b.weight;
    }
    return std::nan("");
  };
  // Independent hand computation: bundles before redistribution are
  // white X->Y = 1 + 1/2, hd X->Y = 1/2, hd Y->Y = 1, so a->c splits 1.5 : 0.5.
  const double white_ac = edge("white", 0, 2), hd_ac = edge("hd", 0, 2);
  const double b_white = bundle_weight("white", 0, 1), b_hd = bundle_weight("hd", 0, 1),
               b_hd_yy = bundle_weight("hd", 1, 1);
  const double tol = 1e-12;
  const bool pass = std::abs(white_ac - 0.75) < tol && std::abs(hd_ac - 0.25) < tol &&
                    std::abs(b_white - 1.75) < tol && std::abs(b_hd - 0.25) < tol && std::abs(b_hd_yy - 1.0) < tol;
  return {pass, fmt("a->c white ", white_ac, " hd ", hd_ac, "; bundles white X->Y ", b_white, ", hd X->Y ", b_hd,
                    ", hd Y->Y ", b_hd_yy)};
}

Outcome filter_bound() {
  std::mt19937_64 rng(99);
  const int graphs = 500;
  std::size_t most_visible = 0;
  bool exact = true;
  for (int g = 0; g < graphs; ++g) {
    std::vector<BundledEdge> bundles;
    if (g % 2 == 0) {
      // Bundles from a synthetic session.
      auto steps = synthetic::random_steps(rng, 6 + rng() % 12, 6, 6, 3);
      GraphParams params;
      params.s_min = 0.3;
      auto edges = derive_edges(steps, compare_similar_pairs(steps, similarity_matrix(steps), 0.3), params);
      std::vector<int> clusters(synthetic::node_count(steps));
      for (auto& c : clusters) c = static_cast<int>(rng() % 3);
      bundles = bundle(edges, clusters);
      redistribute(edges, bundles, 1);
    } else {
      // Coarse weights to force ties around the cap.
      const std::size_t n = rng() % 40;
      for (std::size_t i = 0; i < n; ++i) {
        BundledEdge b;
        b.word = "w" + std::to_string(i);
        b.weight = 0.25 * static_cast<double>(1 + rng() % 6);
        bundles.push_back(b);
      }
    }
    GraphParams params;
    auto f = filter(bundles, params);
    std::size_t visible = 0;
    for (const auto& b : bundles) {
      visible += b.visible ? 1 : 0;
      exact = exact && (b.visible == (b.weight >= f.effective_w_min));
    }
    exact = exact && visible == f.visible_count;
    most_visible = std::max(most_visible, visible);
  }
  std::vector<BundledEdge> tie(13);
  for (std::size_t i = 0; i < tie.size(); ++i) {
    tie[i].word = "w" + std::to_string(i);
    tie[i].weight = 0.5;
  }
  const auto tied = filter(tie, GraphParams{});
  const bool pass = most_visible <= 12 && exact && tied.visible_count == 0;
  return {pass, fmt(graphs, " fuzzed graphs, at most ", most_visible, " visible; 13 equal weights -> ",
                    tied.visible_count, " visible")};
}

Outcome procrustes_recovery() {
  std::mt19937_64 rng(314);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> angle(0.0, 2 * std::numbers::pi), scale(0.05, 20.0), shift(-50, 50);
  const int cases = 100;
  double worst = 0.0;
  for (int c = 0; c < cases; ++c) {
    const std::size_t n = 3 + rng() % 40;
    PointSet x, y;
    for (std::size_t i = 0; i < n; ++i) x.push_back({g(rng), g(rng)});
    const double th = angle(rng), s = scale(rng), tx = shift(rng), ty = shift(rng);
    for (const auto& p : x) {
      y.push_back({s * (std::cos(th) * p.x - std::sin(th) * p.y) + tx, s * (std::sin(th) * p.x + std::cos(th) * p.y) + ty});
    }
    worst = std::max(worst, procrustes_align(y, x).disparity);
  }
  return {worst < 1e-6, fmt(cases, " transformed sets, max disparity ", worst)};
}

Outcome clustering_oracle() {
  std::mt19937_64 rng(2718);
  std::uniform_real_distribution<double> u(0.0, 5.0);
  const int cases = 1000;
  int agree = 0;
  for (int c = 0; c < cases; ++c) {
    const std::size_t n = 1 + rng() % 10;
    PointSet pts;
    for (std::size_t i = 0; i < n; ++i) {
      if (c % 3 == 0) pts.push_back({static_cast<double>(rng() % 4), static_cast<double>(rng() % 4)});
      else pts.push_back({u(rng), u(rng)});
    }
    const double threshold = 0.3 + 0.2 * static_cast<double>(rng() % 15);
    if (oracle::same_partition(cluster_average_linkage(pts, threshold).labels, oracle::average_linkage(pts, threshold))) {
      ++agree;
    }
  }
  return {agree == cases, fmt(agree, "/", cases, " partitions match the exhaustive simulation")};
}

Outcome projection_sanity() {
  StubEmbeddingProvider stub;
  std::mt19937_64 rng(5);
  const std::vector<std::string> base_a = {"red", "barn", "sunset", "wheat", "field", "farm", "rural"};
  const std::vector<std::string> base_b = {"neon", "city", "rain", "night", "robot", "street", "chrome"};
  const std::vector<std::string> extras = {"detailed", "soft", "wide", "warm", "cold", "misty", "vivid", "dusk"};
  std::vector<Vector> vectors;
  std::vector<int> labels;
  for (int blob = 0; blob < 2; ++blob) {
    const auto& base = blob == 0 ? base_a : base_b;
    for (int i = 0; i < 20; ++i) {
      std::string prompt;
      for (const auto& w : base) {
        if (rng() % 5 != 0) prompt += w + " ";
      }
      prompt += extras[rng() % extras.size()];
      vectors.push_back(stub.text_vector(prompt));
      labels.push_back(blob);
    }
  }
  ProjectionOptions opts;
  opts.seed = 42;
  const auto first = project(vectors, opts);
  const auto second = project(vectors, opts);
  bool identical = first.size() == second.size();
  for (std::size_t i = 0; identical && i < first.size(); ++i) identical = first[i] == second[i];
  const double sil = oracle::silhouette(first, labels);
  return {sil > 0.5 && identical, fmt("silhouette ", sil, ", repeated run ", identical ? "identical" : "differs")};
}

Outcome layout_properties() {
  std::mt19937_64 rng(1618);
  std::uniform_real_distribution<double> coord(-2.0, 2.0);
  const int layouts = 200;
  std::size_t overlaps = 0, glyphs = 0, thumbnails = 0;
  double worst = 0.0;
  for (int l = 0; l < layouts; ++l) {
    auto steps = synthetic::random_steps(rng, 3 + rng() % 14, 6, 6, 4);
    const std::size_t n = synthetic::node_count(steps);
    std::vector<ImageNode> nodes(n);
    for (std::size_t s = 0; s < steps.size(); ++s) {
      for (auto v : steps[s].images) nodes[v] = {"i" + std::to_string(v), steps[s].step_id, steps[s].order, s};
    }
    GraphParams params;
    params.s_min = 0.3;
    auto edges = derive_edges(steps, compare_similar_pairs(steps, similarity_matrix(steps), 0.3), params);
    std::vector<int> clusters(n);
    for (auto& c : clusters) c = static_cast<int>(rng() % 3);
    auto bundles = bundle(edges, clusters);
    redistribute(edges, bundles, 1);
    filter(bundles, params);

    PointSet pts;
    for (std::size_t i = 0; i < n; ++i) pts.push_back({coord(rng), coord(rng)});
    std::vector<double> aspect;
    for (std::size_t i = 0; i < n; ++i) aspect.push_back(0.5 + 0.25 * static_cast<double>(rng() % 5));
    LayoutOptions opts;
    auto placed = place_nodes(nodes, pts, node_weights(n, edges), opts, aspect);
    std::vector<Rect> thumbs;
    for (const auto& p : placed) {
      if (p.mode == NodeMode::thumbnail) thumbs.push_back(p.bounds());
    }
    overlaps += oracle::overlap_count(thumbs);
    thumbnails += thumbs.size();

    for (const auto& g : place_glyphs(bundles, edges, placed)) {
      std::set<NodeIndex> ends;
      for (auto b : g.bundles) {
        for (auto e : bundles[b].members) {
          ends.insert(edges[e].src);
          ends.insert(edges[e].tgt);
        }
      }
      double sx = 0.0, sy = 0.0;
      for (auto v : ends) {
        sx += placed[v].xy.x;
        sy += placed[v].xy.y;
      }
      const double k = static_cast<double>(ends.size());
      worst = std::max({worst, std::abs(g.xy.x - sx / k), std::abs(g.xy.y - sy / k)});
      ++glyphs;
    }
  }
  const bool pass = overlaps == 0 && worst <= 1e-9 && glyphs > 0;
  return {pass, fmt(layouts, " layouts, ", thumbnails, " thumbnails, ", overlaps, " overlaps; ", glyphs,
                    " glyphs, max barycenter error ", worst)};
}

Outcome end_to_end() {
  testing::TempDir dir;
  ProvenanceStore store(dir.path());
  std::ostringstream detail;
  bool pass = true;
  for (auto [steps, budget] : {std::pair<std::size_t, double>{16, 5.0}, {30, 15.0}}) {
    synthetic::SessionSpec spec;
    spec.steps = steps;
    spec.seed = 16 + steps;
    const auto t0 = std::chrono::steady_clock::now();
    auto session = synthetic::populate(store, spec);
    const auto t1 = std::chrono::steady_clock::now();
    StubEmbeddingProvider provider;
    auto layout = build_layout(*store.snapshot(session.id), provider, nullptr, BuildParams{});
    const std::string doc = layout_document(*layout).dump();
    const auto t2 = std::chrono::steady_clock::now();
    const double build = std::chrono::duration<double>(t2 - t1).count();
    const double generate = std::chrono::duration<double>(t1 - t0).count();
    const bool ok = build < budget && layout->nodes.size() == steps * 2 && !doc.empty();
    pass = pass && ok;
    detail << steps << " steps: build " << build << " s (budget " << budget << " s), stub generation "
           << generate << " s, " << layout->clusters.cluster_count << " clusters, "
           << layout->filter.visible_count << " visible bundles; ";
  }
  return {pass, detail.str()};
}

Outcome stage_rule() {
  auto seg = segment_stages(4, {0.9, 0.2, 0.8}, 0.6);
  const bool rule = seg.stages == std::vector<StageRange>{{1, 2}, {3, 4}};
  std::mt19937_64 rng(11);
  int trips = 0, restored = 0;
  for (int t = 0; t < 500; ++t) {
    const std::size_t n = 2 + rng() % 15;
    std::vector<double> sims;
    for (std::size_t i = 0; i + 1 < n; ++i) sims.push_back(static_cast<double>(rng() % 100) / 100.0);
    auto base = segment_stages(n, sims, 0.6);
    const int at = 2 + static_cast<int>(rng() % (n - 1));
    const bool boundary = base.boundaries().count(at) != 0;
    auto there = apply_stage_command(base, n, {boundary ? StageCommandKind::merge : StageCommandKind::split, at});
    auto back = apply_stage_command(there, n, {boundary ? StageCommandKind::split : StageCommandKind::merge, at});
    ++trips;
    if (back.stages == base.stages && there.stages != base.stages) ++restored;
  }
  std::ostringstream os;
  for (const auto& r : seg.stages) os << "{" << r.first << "-" << r.last << "}";
  return {rule && restored == trips, fmt("stages ", os.str(), "; ", restored, "/", trips, " round trips restored")};
}

}  // namespace

int main() {
  report("diff-oracle", diff_oracle);
  report("weight-conservation", weight_conservation);
  report("worked-redistribution", worked_example);
  report("filter-bound", filter_bound);
  report("procrustes-recovery", procrustes_recovery);
  report("clustering-oracle", clustering_oracle);
  report("projection-sanity", projection_sanity);
  report("layout-overlap-and-glyphs", layout_properties);
  report("end-to-end-desk-scale", end_to_end);
  report("stage-rule", stage_rule);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
