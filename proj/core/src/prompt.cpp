#include "ivg/prompt.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>

namespace ivg {

namespace {

bool is_separator(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v' || c == ',' ||
         c == '.';
}

bool is_digit(char c) { return c >= '0' && c <= '9'; }

// A period between two digits belongs to a number such as "1.5".
bool decimal_point(std::string_view raw, std::size_t i) {
  return raw[i] == '.' && i > 0 && i + 1 < raw.size() && is_digit(raw[i - 1]) && is_digit(raw[i + 1]);
}

bool is_bracket(char c) { return c == '(' || c == ')' || c == '[' || c == ']'; }

char fold(char c) {
  if (c >= 'A' && c <= 'Z') return static_cast<char>(c - 'A' + 'a');
  return c;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_positive(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  // from_chars accepts "inf"/"nan"; weights must be plain decimals.
  for (char c : s) {
    if (!((c >= '0' && c <= '9') || c == '.' || c == '+' || c == '-' || c == 'e' || c == 'E')) {
      return std::nullopt;
    }
  }
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  if (!std::isfinite(value) || value <= 0.0) return std::nullopt;
  return value;
}

// One matched bracket group in the raw text.
struct Group {
  std::size_t open = 0;
  std::size_t close = 0;
  double multiplier = 1.0;
  // Start of the ":weight" suffix inside the group, or close when absent.
  std::size_t content_end = 0;
};

struct Scan {
  std::map<std::size_t, Group> groups_by_open;
  std::vector<ParseWarning> warnings;
};

Scan scan_groups(std::string_view raw) {
  Scan scan;
  std::vector<std::size_t> stack;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i < raw.size(); ++i) {
    const char c = raw[i];
    if (c == '(' || c == '[') {
      stack.push_back(i);
    } else if (c == ')' || c == ']') {
      const char want = c == ')' ? '(' : '[';
      if (!stack.empty() && raw[stack.back()] == want) {
        pairs.emplace_back(stack.back(), i);
        stack.pop_back();
      } else {
        scan.warnings.push_back({{i, i + 1}, std::string("unbalanced '") + c + "'"});
      }
    }
  }
  for (std::size_t open : stack) {
    scan.warnings.push_back({{open, open + 1}, std::string("unbalanced '") + raw[open] + "'"});
  }

  for (auto [open, close] : pairs) {
    Group g{open, close, raw[open] == '(' ? kParenMultiplier : kBracketMultiplier, close};
    if (raw[open] == '(') {
      // Last top-level colon inside the group introduces an explicit weight.
      int depth = 0;
      std::optional<std::size_t> colon;
      for (std::size_t i = open + 1; i < close; ++i) {
        const char c = raw[i];
        if (c == '(' || c == '[') ++depth;
        else if (c == ')' || c == ']') depth = std::max(0, depth - 1);
        else if (c == ':' && depth == 0) colon = i;
      }
      if (colon) {
        if (auto w = parse_positive(raw.substr(*colon + 1, close - *colon - 1))) {
          g.multiplier = *w;
          g.content_end = *colon;
        } else {
          scan.warnings.push_back({{open, close + 1}, "invalid weight; group read as plain text"});
          g.multiplier = 1.0;
        }
      }
    }
    scan.groups_by_open.emplace(open, g);
  }
  return scan;
}

std::vector<WeightedToken> tokenize(std::string_view raw, const Scan& scan) {
  std::vector<WeightedToken> out;
  std::vector<const Group*> open_groups;
  double multiplier = 1.0;
  auto recompute = [&] {
    multiplier = 1.0;
    for (const Group* g : open_groups) multiplier *= g->multiplier;
  };

  std::string word;
  std::size_t word_begin = 0;
  auto flush = [&](std::size_t end) {
    if (!word.empty()) {
      out.push_back({word, multiplier, {word_begin, end}});
      word.clear();
    }
  };

  for (std::size_t i = 0; i < raw.size(); ++i) {
    // Skip the ":weight" suffix of the innermost open group.
    if (!open_groups.empty() && i >= open_groups.back()->content_end &&
        i < open_groups.back()->close) {
      flush(i);
      i = open_groups.back()->close - 1;
      continue;
    }
    const char c = raw[i];
    if (is_bracket(c)) {
      flush(i);
      if (auto it = scan.groups_by_open.find(i); it != scan.groups_by_open.end()) {
        open_groups.push_back(&it->second);
        recompute();
      } else if (!open_groups.empty() && open_groups.back()->close == i) {
        open_groups.pop_back();
        recompute();
      }
      // Unmatched brackets behave as separators.
      continue;
    }
    if (is_separator(c) && !decimal_point(raw, i)) {
      flush(i);
      continue;
    }
    if (word.empty()) word_begin = i;
    word.push_back(fold(c));
  }
  flush(raw.size());
  return out;
}

// Commas and periods end a clause; phrases never span one.
bool clause_break(std::string_view raw, const WeightedToken& a, const WeightedToken& b) {
  if (a.span.end >= b.span.begin || b.span.begin > raw.size()) return false;
  for (std::size_t i = a.span.end; i < b.span.begin; ++i) {
    if (raw[i] == ',' || (raw[i] == '.' && !decimal_point(raw, i))) return true;
  }
  return false;
}

std::vector<WeightedToken> merge_phrases(std::string_view raw, std::vector<WeightedToken> tokens,
                                         const PhraseTable& phrases) {
  if (phrases.empty() || tokens.size() < 2) return tokens;

  std::map<std::string, std::vector<const PhraseUnit*>> by_first;
  for (const auto& unit : phrases.units()) by_first[unit.front()].push_back(&unit);
  for (auto& [_, units] : by_first) {
    std::sort(units.begin(), units.end(),
              [](const PhraseUnit* a, const PhraseUnit* b) { return a->size() > b->size(); });
  }

  std::vector<WeightedToken> out;
  out.reserve(tokens.size());
  for (std::size_t i = 0; i < tokens.size();) {
    const PhraseUnit* match = nullptr;
    if (auto it = by_first.find(tokens[i].text); it != by_first.end()) {
      for (const PhraseUnit* unit : it->second) {
        if (i + unit->size() > tokens.size()) continue;
        bool ok = true;
        for (std::size_t k = 0; k < unit->size() && ok; ++k) {
          ok = tokens[i + k].text == (*unit)[k] && (k == 0 || !clause_break(raw, tokens[i + k - 1], tokens[i + k]));
        }
        if (ok) {
          match = unit;
          break;
        }
      }
    }
    if (!match) {
      out.push_back(std::move(tokens[i]));
      ++i;
      continue;
    }
    WeightedToken merged;
    merged.text = join_words(*match);
    // Mean weight; kept exact when all constituents agree.
    double sum = 0.0;
    bool uniform = true;
    for (std::size_t k = 0; k < match->size(); ++k) {
      sum += tokens[i + k].weight;
      uniform = uniform && tokens[i + k].weight == tokens[i].weight;
    }
    merged.weight = uniform ? tokens[i].weight : sum / static_cast<double>(match->size());
    merged.span = {tokens[i].span.begin, tokens[i + match->size() - 1].span.end};
    out.push_back(std::move(merged));
    i += match->size();
  }
  return out;
}

}  // namespace

void PhraseTable::add(PhraseUnit unit) {
  if (unit.size() < 2) throw std::invalid_argument("phrase unit needs at least two words");
  units_.insert(std::move(unit));
}

std::string join_words(const PhraseUnit& unit) {
  std::string out;
  for (const auto& w : unit) {
    if (!out.empty()) out.push_back(' ');
    out += w;
  }
  return out;
}

PromptTokens parse_prompt(std::string_view raw, const PhraseTable& phrases) {
  PromptTokens result;
  result.raw = std::string(raw);
  Scan scan = scan_groups(raw);
  result.tokens = merge_phrases(raw, tokenize(raw, scan), phrases);
  result.warnings = std::move(scan.warnings);
  for (const auto& t : result.tokens) result.token_set.insert(t.text);
  return result;
}

std::string serialize_prompt(const std::vector<WeightedToken>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out += ", ";
    if (t.weight == 1.0) {
      out += t.text;
      continue;
    }
    std::array<char, 32> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), t.weight);
    out += '(';
    out += t.text;
    out += ':';
    out.append(buf.data(), ptr);
    out += ')';
  }
  return out;
}

double jaccard_similarity(const PromptTokens& a, const PromptTokens& b) {
  if (a.token_set.empty() && b.token_set.empty()) return 1.0;
  std::size_t common = 0;
  for (const auto& t : a.token_set) common += b.token_set.count(t);
  const std::size_t total = a.token_set.size() + b.token_set.size() - common;
  return static_cast<double>(common) / static_cast<double>(total);
}

PhraseTable detect_phrases(const std::vector<PromptTokens>& corpus) {
  // Neighbour sets per word; "" marks a prompt or clause boundary.
  std::map<std::string, std::set<std::string>> next;
  std::map<std::string, std::set<std::string>> prev;
  std::map<std::string, std::set<std::size_t>> prompts_with;
  for (std::size_t p = 0; p < corpus.size(); ++p) {
    const auto& toks = corpus[p].tokens;
    const std::string_view raw = corpus[p].raw;
    for (std::size_t i = 0; i < toks.size(); ++i) {
      const auto& w = toks[i].text;
      const bool joins_next = i + 1 < toks.size() && !clause_break(raw, toks[i], toks[i + 1]);
      const bool joins_prev = i > 0 && !clause_break(raw, toks[i - 1], toks[i]);
      next[w].insert(joins_next ? toks[i + 1].text : std::string());
      prev[w].insert(joins_prev ? toks[i - 1].text : std::string());
      prompts_with[w].insert(p);
    }
  }

  // a is glued to b when every a is followed by b and every b preceded by a.
  auto glued_successor = [&](const std::string& a) -> std::optional<std::string> {
    const auto& n = next[a];
    if (n.size() != 1 || n.begin()->empty() || *n.begin() == a) return std::nullopt;
    const auto& b = *n.begin();
    const auto& p = prev[b];
    if (p.size() != 1 || *p.begin() != a) return std::nullopt;
    return b;
  };
  auto has_glued_predecessor = [&](const std::string& b) {
    const auto& p = prev[b];
    if (p.size() != 1 || p.begin()->empty()) return false;
    auto succ = glued_successor(*p.begin());
    return succ && *succ == b;
  };

  PhraseTable table;
  for (const auto& [word, _] : next) {
    if (has_glued_predecessor(word)) continue;
    PhraseUnit chain{word};
    std::set<std::string> seen{word};
    for (auto succ = glued_successor(word); succ && !seen.count(*succ);
         succ = glued_successor(*succ)) {
      seen.insert(*succ);
      chain.push_back(*succ);
    }
    if (chain.size() >= 2 && prompts_with[word].size() >= 2) table.add(std::move(chain));
  }
  return table;
}

}  // namespace ivg
