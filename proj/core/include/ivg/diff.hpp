#pragma once

// Word-level comparison of two prompts: minimal alignment, reorder
// detection, then weight comparison of the paired words.

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ivg/prompt.hpp"

namespace ivg {

enum class EditAction { insert, remove, reorder, increase_weight, decrease_weight };

std::string_view to_string(EditAction action);
// Throws std::invalid_argument on unknown names.
EditAction parse_edit_action(std::string_view name);

struct EditOp {
  std::string word;
  EditAction action = EditAction::insert;
  std::optional<double> weight_before;
  std::optional<double> weight_after;
  // Token positions in the source / target prompt, where applicable.
  std::optional<std::size_t> src_index;
  std::optional<std::size_t> tgt_index;

  bool is_weight_change() const {
    return action == EditAction::increase_weight || action == EditAction::decrease_weight;
  }
};

struct PromptDiff {
  std::string src_step;
  std::string tgt_step;
  std::vector<EditOp> ops;

  std::size_t m() const { return ops.size(); }
};

struct Alignment {
  std::vector<std::pair<std::size_t, std::size_t>> matched;  // (index in a, index in b)
  std::vector<std::size_t> removed;                          // indices in a
  std::vector<std::size_t> inserted;                         // indices in b

  std::size_t cost() const { return removed.size() + inserted.size(); }
};

// Myers O(ND) shortest edit script over token texts; weights are ignored.
Alignment myers_align(const std::vector<std::string>& a, const std::vector<std::string>& b);
Alignment myers_align(const PromptTokens& a, const PromptTokens& b);

struct ReorderResult {
  std::vector<EditOp> ops;  // reorder, remove and insert ops
  // Pairs (index in a, index in b) joined as reorders; their weights are
  // compared alongside the aligned matches.
  std::vector<std::pair<std::size_t, std::size_t>> reordered;
};

// Pairs removed/inserted occurrences of the same word greedily in
// positional order; unpaired edits stay plain inserts/removes.
ReorderResult detect_reorders(const PromptTokens& a, const PromptTokens& b,
                              const Alignment& alignment);

std::vector<EditOp> compare_weights(const PromptTokens& a, const PromptTokens& b,
                                    const std::vector<std::pair<std::size_t, std::size_t>>& pairs);

PromptDiff diff_prompts(const PromptTokens& a, const PromptTokens& b);

inline constexpr double kWeightEpsilon = 1e-9;

}  // namespace ivg
