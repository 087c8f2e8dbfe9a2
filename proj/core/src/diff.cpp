#include "ivg/diff.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <stdexcept>

namespace ivg {

std::string_view to_string(EditAction action) {
  switch (action) {
    case EditAction::insert: return "insert";
    case EditAction::remove: return "remove";
    case EditAction::reorder: return "reorder";
    case EditAction::increase_weight: return "increase_weight";
    case EditAction::decrease_weight: return "decrease_weight";
  }
  return "unknown";
}

EditAction parse_edit_action(std::string_view name) {
  for (auto a : {EditAction::insert, EditAction::remove, EditAction::reorder,
                 EditAction::increase_weight, EditAction::decrease_weight}) {
    if (to_string(a) == name) return a;
  }
  throw std::invalid_argument("unknown edit action: " + std::string(name));
}

Alignment myers_align(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  const long n = static_cast<long>(a.size());
  const long m = static_cast<long>(b.size());
  const long max = n + m;
  const long offset = max + 1;
  std::vector<long> v(static_cast<std::size_t>(2 * max + 3), 0);
  std::vector<std::vector<long>> trace;

  auto at = [&](std::vector<long>& vec, long k) -> long& {
    return vec[static_cast<std::size_t>(k + offset)];
  };

  long found_d = -1;
  for (long d = 0; d <= max && found_d < 0; ++d) {
    trace.push_back(v);
    for (long k = -d; k <= d; k += 2) {
      long x;
      if (k == -d || (k != d && at(v, k - 1) < at(v, k + 1))) {
        x = at(v, k + 1);  // step down: insertion from b
      } else {
        x = at(v, k - 1) + 1;  // step right: removal from a
      }
      long y = x - k;
      while (x < n && y < m && a[static_cast<std::size_t>(x)] == b[static_cast<std::size_t>(y)]) {
        ++x;
        ++y;
      }
      at(v, k) = x;
      if (x >= n && y >= m) {
        found_d = d;
        break;
      }
    }
  }

  // Backtrack through the stored frontiers.
  Alignment out;
  long x = n;
  long y = m;
  for (long d = found_d; d >= 0; --d) {
    auto& vd = trace[static_cast<std::size_t>(d)];
    const long k = x - y;
    long prev_k;
    if (d == 0) {
      prev_k = 0;
    } else if (k == -d || (k != d && at(vd, k - 1) < at(vd, k + 1))) {
      prev_k = k + 1;
    } else {
      prev_k = k - 1;
    }
    const long prev_x = d == 0 ? 0 : at(vd, prev_k);
    const long prev_y = prev_x - prev_k;
    while (x > prev_x && y > prev_y) {
      --x;
      --y;
      out.matched.emplace_back(static_cast<std::size_t>(x), static_cast<std::size_t>(y));
    }
    if (d > 0) {
      if (x == prev_x) {
        out.inserted.push_back(static_cast<std::size_t>(prev_y));
      } else {
        out.removed.push_back(static_cast<std::size_t>(prev_x));
      }
    }
    x = prev_x;
    y = prev_y;
  }
  std::reverse(out.matched.begin(), out.matched.end());
  std::sort(out.removed.begin(), out.removed.end());
  std::sort(out.inserted.begin(), out.inserted.end());
  return out;
}

namespace {

std::vector<std::string> texts(const PromptTokens& p) {
  std::vector<std::string> out;
  out.reserve(p.tokens.size());
  for (const auto& t : p.tokens) out.push_back(t.text);
  return out;
}

bool weights_differ(double x, double y) {
  return std::abs(x - y) > kWeightEpsilon * std::max({1.0, std::abs(x), std::abs(y)});
}

}  // namespace

Alignment myers_align(const PromptTokens& a, const PromptTokens& b) {
  return myers_align(texts(a), texts(b));
}

ReorderResult detect_reorders(const PromptTokens& a, const PromptTokens& b,
                              const Alignment& alignment) {
  // Inserted positions per word, consumed front to back.
  std::map<std::string, std::deque<std::size_t>> inserted_by_word;
  for (std::size_t j : alignment.inserted) inserted_by_word[b.tokens[j].text].push_back(j);

  ReorderResult result;
  std::vector<bool> insert_used(b.tokens.size(), false);
  std::vector<EditOp> removes;
  for (std::size_t i : alignment.removed) {
    const auto& word = a.tokens[i].text;
    auto it = inserted_by_word.find(word);
    if (it != inserted_by_word.end() && !it->second.empty()) {
      const std::size_t j = it->second.front();
      it->second.pop_front();
      insert_used[j] = true;
      result.reordered.emplace_back(i, j);
      continue;
    }
    EditOp op;
    op.word = word;
    op.action = EditAction::remove;
    op.src_index = i;
    removes.push_back(std::move(op));
  }

  std::sort(result.reordered.begin(), result.reordered.end(),
            [](const auto& l, const auto& r) { return l.second < r.second; });
  for (auto [i, j] : result.reordered) {
    EditOp op;
    op.word = b.tokens[j].text;
    op.action = EditAction::reorder;
    op.src_index = i;
    op.tgt_index = j;
    result.ops.push_back(std::move(op));
  }
  for (auto& op : removes) result.ops.push_back(std::move(op));
  for (std::size_t j : alignment.inserted) {
    if (insert_used[j]) continue;
    EditOp op;
    op.word = b.tokens[j].text;
    op.action = EditAction::insert;
    op.tgt_index = j;
    result.ops.push_back(std::move(op));
  }
  return result;
}

std::vector<EditOp> compare_weights(const PromptTokens& a, const PromptTokens& b,
                                    const std::vector<std::pair<std::size_t, std::size_t>>& pairs) {
  std::vector<EditOp> ops;
  for (auto [i, j] : pairs) {
    const double before = a.tokens[i].weight;
    const double after = b.tokens[j].weight;
    if (!weights_differ(before, after)) continue;
    EditOp op;
    op.word = b.tokens[j].text;
    op.action = after > before ? EditAction::increase_weight : EditAction::decrease_weight;
    op.weight_before = before;
    op.weight_after = after;
    op.src_index = i;
    op.tgt_index = j;
    ops.push_back(std::move(op));
  }
  std::sort(ops.begin(), ops.end(),
            [](const EditOp& l, const EditOp& r) { return *l.tgt_index < *r.tgt_index; });
  return ops;
}

PromptDiff diff_prompts(const PromptTokens& a, const PromptTokens& b) {
  PromptDiff diff;
  const Alignment alignment = myers_align(a, b);
  ReorderResult reorders = detect_reorders(a, b, alignment);

  auto paired = alignment.matched;
  paired.insert(paired.end(), reorders.reordered.begin(), reorders.reordered.end());
  auto weight_ops = compare_weights(a, b, paired);

  diff.ops = std::move(reorders.ops);
  for (auto& op : weight_ops) diff.ops.push_back(std::move(op));
  return diff;
}

}  // namespace ivg
