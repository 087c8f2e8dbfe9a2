#pragma once

// Prompt tokenization: weight syntax, phrase units and set similarity.
//
// Grammar accepted by parse_prompt():
//   (text:1.3)  explicit positive weight
//   (text)      weight x 1.1
//   [text]      weight x 0.9
// Groups nest and their multipliers compose. Words are case-folded and
// separated by whitespace, commas and periods.

#include <cstddef>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace ivg {

struct TextSpan {
  std::size_t begin = 0;
  std::size_t end = 0;  // one past the last byte

  friend bool operator==(const TextSpan&, const TextSpan&) = default;
};

struct WeightedToken {
  std::string text;
  double weight = 1.0;
  TextSpan span;

  friend bool operator==(const WeightedToken&, const WeightedToken&) = default;
};

struct ParseWarning {
  TextSpan span;
  std::string message;
};

struct PromptTokens {
  std::string raw;
  std::vector<WeightedToken> tokens;
  std::set<std::string> token_set;
  std::vector<ParseWarning> warnings;

  std::size_t size() const { return tokens.size(); }
  bool empty() const { return tokens.empty(); }
};

// A multi-word unit, stored as its constituent words in order.
using PhraseUnit = std::vector<std::string>;

class PhraseTable {
 public:
  PhraseTable() = default;

  // Throws std::invalid_argument for units with fewer than two words.
  void add(PhraseUnit unit);

  const std::set<PhraseUnit>& units() const { return units_; }
  bool empty() const { return units_.empty(); }
  std::size_t size() const { return units_.size(); }
  bool contains(const PhraseUnit& unit) const { return units_.count(unit) != 0; }

 private:
  std::set<PhraseUnit> units_;
};

inline constexpr double kParenMultiplier = 1.1;
inline constexpr double kBracketMultiplier = 0.9;

PromptTokens parse_prompt(std::string_view raw, const PhraseTable& phrases = {});

// Inverse of parse_prompt up to separators: weighted tokens are written as
// "(text:w)" with a round-trippable weight, default-weight tokens verbatim.
std::string serialize_prompt(const std::vector<WeightedToken>& tokens);

// |A ∩ B| / |A ∪ B| over token sets; 1.0 when both are empty.
double jaccard_similarity(const PromptTokens& a, const PromptTokens& b);

// Maximal contiguous runs of words that always occur together within a
// clause (commas and periods separate clauses) and appear in at least two
// prompts of the corpus.
PhraseTable detect_phrases(const std::vector<PromptTokens>& corpus);

std::string join_words(const PhraseUnit& unit);

}  // namespace ivg
