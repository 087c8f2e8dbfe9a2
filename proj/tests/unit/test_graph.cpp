#include <doctest.h>

#include <algorithm>
#include <map>
#include <random>

#include "ivg/graph.hpp"
#include "synthetic.hpp"

using namespace ivg;

namespace {

PromptStep step(const std::string& id, int order, const std::string& prompt,
                std::vector<NodeIndex> images) {
  return {id, order, parse_prompt(prompt), std::move(images)};
}

struct Built {
  std::vector<Edge> edges;
  std::vector<BundledEdge> bundles;
};

Built build(const std::vector<PromptStep>& steps, const std::vector<int>& clusters, double s_min,
            int passes = 1) {
  GraphParams params;
  params.s_min = s_min;
  auto sim = similarity_matrix(steps);
  auto pairs = compare_similar_pairs(steps, sim, s_min);
  Built b;
  b.edges = derive_edges(steps, pairs, params);
  b.bundles = bundle(b.edges, clusters);
  redistribute(b.edges, b.bundles, passes);
  return b;
}

const BundledEdge& find_bundle(const std::vector<BundledEdge>& bundles, const std::string& word,
                               int src, int tgt) {
  auto it = std::find_if(bundles.begin(), bundles.end(), [&](const BundledEdge& b) {
    return b.word == word && b.src_cluster == src && b.tgt_cluster == tgt;
  });
  REQUIRE(it != bundles.end());
  return *it;
}

double edge_weight(const std::vector<Edge>& edges, const std::string& word, NodeIndex s, NodeIndex t) {
  for (const auto& e : edges) {
    if (e.word == word && e.src == s && e.tgt == t) return e.weight;
  }
  FAIL("edge not found");
  return 0.0;
}

std::vector<BundledEdge> weighted_bundles(const std::vector<double>& weights) {
  std::vector<BundledEdge> out;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    BundledEdge b;
    b.word = "w" + std::to_string(i);
    b.weight = weights[i];
    out.push_back(b);
  }
  return out;
}

}  // namespace

TEST_CASE("initial edge weights") {
  SUBCASE("one image each, three ops") {
    std::vector<PromptStep> steps = {step("s1", 1, "a b c d e f g h i j", {0}),
                                     step("s2", 2, "a b c d e f g h i j x y z", {1})};
    auto pairs = compare_similar_pairs(steps, similarity_matrix(steps), 0.6);
    REQUIRE(pairs.size() == 1);
    REQUIRE(pairs[0].diff.m() == 3);
    auto edges = derive_edges(steps, pairs, {});
    REQUIRE(edges.size() == 3);
    for (const auto& e : edges) CHECK(e.weight == doctest::Approx(1.0 / 3));
  }
  SUBCASE("two images each, one op") {
    std::vector<PromptStep> steps = {step("s1", 1, "a b c d e", {0, 1}),
                                     step("s2", 2, "a b c d e f", {2, 3})};
    auto pairs = compare_similar_pairs(steps, similarity_matrix(steps), 0.6);
    auto edges = derive_edges(steps, pairs, {});
    REQUIRE(edges.size() == 4);
    for (const auto& e : edges) {
      CHECK(e.weight == doctest::Approx(0.25));
      CHECK(e.src < 2);
      CHECK(e.tgt >= 2);
    }
  }
  SUBCASE("dissimilar pair has no edges") {
    std::vector<PromptStep> steps = {step("s1", 1, "a b", {0}), step("s2", 2, "c d", {1})};
    auto pairs = compare_similar_pairs(steps, similarity_matrix(steps), 0.6);
    CHECK(pairs.empty());
    CHECK(derive_edges(steps, pairs, {}).empty());
  }
  SUBCASE("identical prompts have no edges") {
    std::vector<PromptStep> steps = {step("s1", 1, "a b", {0}), step("s2", 2, "a b", {1})};
    auto pairs = compare_similar_pairs(steps, similarity_matrix(steps), 0.6);
    REQUIRE(pairs.size() == 1);
    CHECK(derive_edges(steps, pairs, {}).empty());
  }
  SUBCASE("edges point forward in time") {
    std::vector<PromptStep> steps = {step("late", 5, "a b c d e f", {0}),
                                     step("early", 2, "a b c d e", {1})};
    auto pairs = compare_similar_pairs(steps, similarity_matrix(steps), 0.6);
    auto edges = derive_edges(steps, pairs, {});
    REQUIRE(edges.size() == 1);
    CHECK(edges[0].src == 1);
    CHECK(edges[0].tgt == 0);
    CHECK(edges[0].action == EditAction::insert);
  }
}

TEST_CASE("bundling") {
  std::vector<Edge> edges = {{"1girl", EditAction::insert, 0, 2, 0.25, kNoBundle},
                             {"1girl", EditAction::insert, 1, 3, 0.25, kNoBundle},
                             {"1girl", EditAction::increase_weight, 0, 3, 0.5, kNoBundle},
                             {"hat", EditAction::insert, 0, 2, 0.4, kNoBundle}};
  std::vector<int> clusters = {0, 0, 1, 1};
  auto bundles = bundle(edges, clusters);
  REQUIRE(bundles.size() == 3);
  const auto& girl = find_bundle(bundles, "1girl", 0, 1);
  for (const auto& b : bundles) {
    double sum = 0.0;
    for (auto e : b.members) {
      sum += edges[e].weight;
      CHECK(edges[e].word == b.word);
      CHECK(edges[e].action == b.action);
      CHECK(&bundles[edges[e].bundle] == &b);
    }
    CHECK(b.weight == doctest::Approx(sum));
  }
  CHECK(girl.members.size() == 2);
  auto hat = find_bundle(bundles, "hat", 0, 1);
  CHECK(hat.members.size() == 1);
  CHECK(hat.weight == 0.4);
}

TEST_CASE("worked session redistribution") {
  // a: "cat" (cluster X=0), b: "white cat" (Y=1), c: "white cat, hd" (Y=1)
  std::vector<PromptStep> steps = {step("p1", 1, "cat", {0}), step("p2", 2, "white cat", {1}),
                                   step("p3", 3, "white cat, hd", {2})};
  std::vector<int> clusters = {0, 1, 1};
  GraphParams params;
  params.s_min = 1.0 / 3;
  auto pairs = compare_similar_pairs(steps, similarity_matrix(steps), params.s_min);
  REQUIRE(pairs.size() == 3);
  auto edges = derive_edges(steps, pairs, params);
  CHECK(edge_weight(edges, "white", 0, 1) == doctest::Approx(1.0));
  CHECK(edge_weight(edges, "white", 0, 2) == doctest::Approx(0.5));
  CHECK(edge_weight(edges, "hd", 0, 2) == doctest::Approx(0.5));
  CHECK(edge_weight(edges, "hd", 1, 2) == doctest::Approx(1.0));

  auto bundles = bundle(edges, clusters);
  CHECK(find_bundle(bundles, "white", 0, 1).weight == doctest::Approx(1.5));
  CHECK(find_bundle(bundles, "hd", 0, 1).weight == doctest::Approx(0.5));
  CHECK(find_bundle(bundles, "hd", 1, 1).weight == doctest::Approx(1.0));

  redistribute(edges, bundles, 1);
  CHECK(edge_weight(edges, "white", 0, 2) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(edge_weight(edges, "hd", 0, 2) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(edge_weight(edges, "white", 0, 1) == doctest::Approx(1.0));
  CHECK(edge_weight(edges, "hd", 1, 2) == doctest::Approx(1.0));
  CHECK(find_bundle(bundles, "white", 0, 1).weight == doctest::Approx(1.75));
  CHECK(find_bundle(bundles, "hd", 0, 1).weight == doctest::Approx(0.25));
  CHECK(find_bundle(bundles, "hd", 1, 1).weight == doctest::Approx(1.0));

  auto w = node_weights(3, edges);
  CHECK(w[0] == doctest::Approx(2.0));
  CHECK(w[1] == doctest::Approx(2.0));
  CHECK(w[2] == doctest::Approx(2.0));

  auto merged = merge_equal(edges);
  CHECK(merged.size() == 4);
  CHECK(std::none_of(merged.begin(), merged.end(), [](const MergedEdge& m) { return m.merged(); }));

  SUBCASE("default threshold keeps only the closest pair") {
    auto strict = compare_similar_pairs(steps, similarity_matrix(steps), 0.6);
    REQUIRE(strict.size() == 1);
    CHECK(strict[0].earlier == 1);
    CHECK(strict[0].later == 2);
  }
}

TEST_CASE("redistribution of simple pairs") {
  std::vector<Edge> single = {{"x", EditAction::insert, 0, 1, 0.2, kNoBundle}};
  auto b1 = bundle(single, {0, 0});
  redistribute(single, b1, 1);
  CHECK(single[0].weight == doctest::Approx(1.0));

  std::vector<Edge> sym = {{"x", EditAction::insert, 0, 1, 0.5, kNoBundle},
                           {"y", EditAction::insert, 0, 1, 0.5, kNoBundle}};
  auto b2 = bundle(sym, {0, 1});
  redistribute(sym, b2, 1);
  CHECK(sym[0].weight == doctest::Approx(0.5));
  CHECK(sym[1].weight == doctest::Approx(0.5));
}

TEST_CASE("merging equal weights") {
  std::vector<Edge> two = {{"x", EditAction::insert, 0, 1, 0.5, 0}, {"y", EditAction::remove, 0, 1, 0.5, 1}};
  auto m2 = merge_equal(two);
  REQUIRE(m2.size() == 1);
  CHECK(m2[0].modifications.size() == 2);
  CHECK(m2[0].merged());
  CHECK(m2[0].weight() == doctest::Approx(1.0));

  std::vector<Edge> uneven = {{"x", EditAction::insert, 0, 1, 0.75, 0}, {"y", EditAction::insert, 0, 1, 0.25, 1}};
  CHECK(merge_equal(uneven).size() == 2);

  std::vector<Edge> thirds = {{"x", EditAction::insert, 0, 1, 1.0 / 3, 0},
                              {"y", EditAction::insert, 0, 1, 1.0 / 3, 1},
                              {"z", EditAction::reorder, 0, 1, 1.0 - 2.0 / 3, 2}};
  auto m3 = merge_equal(thirds);
  REQUIRE(m3.size() == 1);
  CHECK(m3[0].modifications.size() == 3);

  std::vector<Edge> other_pairs = {{"x", EditAction::insert, 0, 1, 0.5, 0}, {"x", EditAction::insert, 0, 2, 0.5, 0}};
  CHECK(merge_equal(other_pairs).size() == 2);
}

TEST_CASE("filter") {
  GraphParams params;
  SUBCASE("under capacity") {
    auto b = weighted_bundles({0.1, 0.5, 0.2, 0.9, 0.3});
    auto r = filter(b, params);
    CHECK(r.visible_count == 5);
    CHECK(r.effective_w_min == 0.0);
    CHECK(r.automatic);
  }
  SUBCASE("twenty distinct weights") {
    std::vector<double> w;
    for (int i = 0; i < 20; ++i) w.push_back(0.05 * (i + 1));
    auto b = weighted_bundles(w);
    auto r = filter(b, params);
    CHECK(r.visible_count == 12);
    CHECK(r.effective_w_min == doctest::Approx(0.45));
  }
  SUBCASE("thirteen equal weights") {
    auto b = weighted_bundles(std::vector<double>(13, 0.4));
    auto r = filter(b, params);
    CHECK(r.visible_count == 0);
    for (const auto& x : b) CHECK_FALSE(x.visible);
  }
  SUBCASE("tie straddling the cap") {
    std::vector<double> w(10, 0.9);
    for (int i = 0; i < 4; ++i) w.push_back(0.3);
    auto b = weighted_bundles(w);
    auto r = filter(b, params);
    CHECK(r.visible_count == 10);
  }
  SUBCASE("manual threshold") {
    params.w_min = 0.35;
    auto b = weighted_bundles({0.1, 0.35, 0.9});
    auto r = filter(b, params);
    CHECK_FALSE(r.automatic);
    CHECK(r.visible_count == 2);
    CHECK_FALSE(b[0].visible);
  }
  SUBCASE("invalid parameters") {
    auto b = weighted_bundles({0.1});
    params.w_min = -1.0;
    CHECK_THROWS_AS(filter(b, params), std::invalid_argument);
    params.w_min.reset();
    params.n_e = 0;
    CHECK_THROWS_AS(filter(b, params), std::invalid_argument);
  }
}

TEST_CASE("node weights") {
  std::vector<Edge> edges = {{"x", EditAction::insert, 0, 1, 0.75, 0}, {"y", EditAction::insert, 0, 1, 0.25, 0}};
  auto w = node_weights(3, edges);
  CHECK(w[0] == doctest::Approx(1.0));
  CHECK(w[1] == doctest::Approx(1.0));
  CHECK(w[2] == 0.0);
}

TEST_CASE("weight conservation on random sessions") {
  std::mt19937_64 rng(77);
  for (int session = 0; session < 150; ++session) {
    auto steps = synthetic::random_steps(rng, 3 + rng() % 10, 6, 6, 3);
    const auto n = synthetic::node_count(steps);
    std::vector<int> clusters(n);
    for (auto& c : clusters) c = static_cast<int>(rng() % 3);
    const double s_min = 0.3 + 0.1 * static_cast<double>(rng() % 5);
    GraphParams params;
    params.s_min = s_min;
    auto pairs = compare_similar_pairs(steps, similarity_matrix(steps), s_min);
    auto edges = derive_edges(steps, pairs, params);

    std::map<std::pair<std::size_t, std::size_t>, double> per_prompt_pair;
    std::map<NodeIndex, std::size_t> step_of;
    for (std::size_t s = 0; s < steps.size(); ++s) {
      for (auto img : steps[s].images) step_of[img] = s;
    }
    for (const auto& e : edges) {
      CHECK(e.src != e.tgt);
      CHECK(steps[step_of[e.src]].order < steps[step_of[e.tgt]].order);
      per_prompt_pair[{step_of[e.src], step_of[e.tgt]}] += e.weight;
    }
    for (const auto& [key, sum] : per_prompt_pair) CHECK(std::abs(sum - 1.0) < 1e-9);

    auto bundles = bundle(edges, clusters);
    auto check_sums = [&] {
      for (const auto& b : bundles) {
        double s = 0.0;
        for (auto e : b.members) s += edges[e].weight;
        CHECK(std::abs(s - b.weight) < 1e-9);
      }
    };
    check_sums();
    redistribute(edges, bundles, 1);
    check_sums();
    std::map<std::pair<NodeIndex, NodeIndex>, double> per_image_pair;
    for (const auto& e : edges) {
      CHECK(std::isfinite(e.weight));
      CHECK(e.weight > 0.0);
      CHECK(e.weight <= 1.0 + 1e-12);
      per_image_pair[{e.src, e.tgt}] += e.weight;
    }
    for (const auto& [key, sum] : per_image_pair) CHECK(std::abs(sum - 1.0) < 1e-9);

    auto f = filter(bundles, params);
    CHECK(f.visible_count <= 12);
    for (const auto& b : bundles) CHECK(b.visible == (b.weight >= f.effective_w_min));

    auto again = build(steps, clusters, s_min);
    REQUIRE(again.edges.size() == edges.size());
    for (std::size_t i = 0; i < edges.size(); ++i) CHECK(again.edges[i].weight == edges[i].weight);
  }
}
