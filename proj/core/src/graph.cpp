#include "ivg/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>

namespace ivg {

std::vector<double> similarity_matrix(const std::vector<PromptStep>& steps) {
  const std::size_t n = steps.size();
  std::vector<double> s(n * n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      s[i * n + j] = s[j * n + i] = jaccard_similarity(steps[i].tokens, steps[j].tokens);
    }
  }
  return s;
}

std::vector<SimilarPair> compare_similar_pairs(const std::vector<PromptStep>& steps,
                                               const std::vector<double>& similarity, double s_min) {
  const std::size_t n = steps.size();
  std::vector<SimilarPair> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const double sim = similarity[i * n + j];
      if (sim < s_min) continue;
      // Order by creation so edges always point forward in time.
      const bool forward = steps[i].order <= steps[j].order;
      SimilarPair pair;
      pair.earlier = forward ? i : j;
      pair.later = forward ? j : i;
      pair.similarity = sim;
      pair.diff = diff_prompts(steps[pair.earlier].tokens, steps[pair.later].tokens);
      pair.diff.src_step = steps[pair.earlier].step_id;
      pair.diff.tgt_step = steps[pair.later].step_id;
      pairs.push_back(std::move(pair));
    }
  }
  return pairs;
}

std::vector<Edge> derive_edges(const std::vector<PromptStep>& steps,
                               const std::vector<SimilarPair>& pairs, const GraphParams& params) {
  std::vector<Edge> edges;
  for (const auto& pair : pairs) {
    if (pair.similarity < params.s_min) continue;
    const auto& src_images = steps[pair.earlier].images;
    const auto& tgt_images = steps[pair.later].images;
    const std::size_t m = pair.diff.m();
    if (m == 0 || src_images.empty() || tgt_images.empty()) continue;
    const double weight =
        1.0 / (static_cast<double>(src_images.size()) * static_cast<double>(tgt_images.size()) *
               static_cast<double>(m));
    for (const auto& op : pair.diff.ops) {
      for (NodeIndex s : src_images) {
        for (NodeIndex t : tgt_images) edges.push_back({op.word, op.action, s, t, weight, kNoBundle});
      }
    }
  }
  return edges;
}

std::vector<BundledEdge> bundle(std::vector<Edge>& edges, const std::vector<int>& cluster_of_node) {
  using Key = std::tuple<std::string, EditAction, int, int>;
  std::vector<BundledEdge> bundles;
  // Keys are visited in sorted order so bundle ids do not depend on edge order.
  std::map<Key, std::vector<std::size_t>> grouped;
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto& edge = edges[e];
    grouped[{edge.word, edge.action, cluster_of_node.at(edge.src), cluster_of_node.at(edge.tgt)}]
        .push_back(e);
  }
  for (auto& [key, members] : grouped) {
    BundledEdge b;
    std::tie(b.word, b.action, b.src_cluster, b.tgt_cluster) = key;
    for (std::size_t e : members) {
      b.weight += edges[e].weight;
      edges[e].bundle = bundles.size();
    }
    b.members = std::move(members);
    bundles.push_back(std::move(b));
  }
  return bundles;
}

void redistribute(std::vector<Edge>& edges, std::vector<BundledEdge>& bundles, int passes) {
  for (int pass = 0; pass < passes; ++pass) {
    std::map<std::pair<NodeIndex, NodeIndex>, double> denominators;
    for (const auto& e : edges) denominators[{e.src, e.tgt}] += bundles.at(e.bundle).weight;
    std::vector<double> updated(edges.size());
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const auto& e = edges[i];
      updated[i] = bundles[e.bundle].weight / denominators[{e.src, e.tgt}];
    }
    for (std::size_t i = 0; i < edges.size(); ++i) edges[i].weight = updated[i];
    for (auto& b : bundles) {
      b.weight = 0.0;
      for (std::size_t e : b.members) b.weight += edges[e].weight;
    }
  }
}

double MergedEdge::weight() const {
  double w = 0.0;
  for (const auto& m : modifications) w += m.weight_share * m.frequency;
  return w;
}

std::vector<MergedEdge> merge_equal(const std::vector<Edge>& edges) {
  std::map<std::pair<NodeIndex, NodeIndex>, std::vector<std::size_t>> by_pair;
  for (std::size_t i = 0; i < edges.size(); ++i) by_pair[{edges[i].src, edges[i].tgt}].push_back(i);

  std::vector<MergedEdge> out;
  for (auto& [pair, members] : by_pair) {
    std::stable_sort(members.begin(), members.end(), [&](std::size_t a, std::size_t b) {
      return edges[a].weight > edges[b].weight;
    });
    for (std::size_t start = 0; start < members.size();) {
      const double anchor = edges[members[start]].weight;
      std::size_t end = start + 1;
      while (end < members.size() && std::abs(edges[members[end]].weight - anchor) <= kMergeTolerance) {
        ++end;
      }
      MergedEdge merged;
      merged.src = pair.first;
      merged.tgt = pair.second;
      for (std::size_t k = start; k < end; ++k) {
        const auto& e = edges[members[k]];
        merged.edges.push_back(members[k]);
        auto same = std::find_if(merged.modifications.begin(), merged.modifications.end(),
                                 [&](const Modification& m) { return m.word == e.word && m.action == e.action; });
        if (same != merged.modifications.end()) {
          ++same->frequency;
        } else {
          merged.modifications.push_back({e.word, e.action, e.weight, 1});
        }
      }
      out.push_back(std::move(merged));
      start = end;
    }
  }
  return out;
}

FilterResult filter(std::vector<BundledEdge>& bundles, const GraphParams& params) {
  FilterResult result;
  if (params.w_min) {
    if (!(*params.w_min >= 0.0)) throw std::invalid_argument("w_min must be non-negative");
    result.automatic = false;
    result.effective_w_min = *params.w_min;
  } else {
    if (params.n_e <= 0) throw std::invalid_argument("n_e must be positive");
    const auto cap = static_cast<std::size_t>(params.n_e);
    std::vector<double> sorted;
    sorted.reserve(bundles.size());
    for (const auto& b : bundles) sorted.push_back(b.weight);
    std::sort(sorted.begin(), sorted.end(), std::greater<>());
    if (sorted.size() > cap) {
      const double cutoff = sorted[cap - 1];
      if (sorted[cap] >= cutoff - kMergeTolerance) {
        // A tie straddles the cap: admit only weights clearly above it.
        std::optional<std::size_t> last_above;
        for (std::size_t k = 0; k < sorted.size() && sorted[k] > cutoff + kMergeTolerance; ++k) {
          last_above = k;
        }
        result.effective_w_min = last_above
                                     ? sorted[*last_above]
                                     : std::nextafter(sorted.front(), std::numeric_limits<double>::infinity());
      } else {
        result.effective_w_min = cutoff;
      }
    }
  }
  for (auto& b : bundles) {
    b.visible = b.weight >= result.effective_w_min;
    if (b.visible) ++result.visible_count;
  }
  return result;
}

std::vector<double> node_weights(std::size_t node_count, const std::vector<Edge>& edges) {
  std::vector<double> w(node_count, 0.0);
  for (const auto& e : edges) {
    w.at(e.src) += e.weight;
    w.at(e.tgt) += e.weight;
  }
  return w;
}

}  // namespace ivg
