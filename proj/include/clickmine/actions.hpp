#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "clickmine/encode.hpp"

namespace clickmine {

enum class Level : std::uint8_t { Low = 0, High = 1 };

inline const char* level_name(Level l) { return l == Level::High ? "High" : "Low"; }

/// The seven behavioral categories, in canonical order.
enum class Category : std::uint8_t {
  Rewatch = 0,
  Skipping,
  FastWatching,
  SlowWatching,
  ClearConcept,
  CheckbackReference,
  PlayrateTransition,
};

inline constexpr int kNumCategories = 7;

const char* category_name(Category c);

struct BehavioralCategory {
  std::string name;
  std::vector<std::vector<ClickSymbol>> patterns;  // 4-symbol click groups
};

using Taxonomy = std::array<BehavioralCategory, kNumCategories>;

/// The default click groups for each category. Every pattern is 4 symbols
/// long and the sets are disjoint across categories.
const Taxonomy& default_taxonomy();

/// Token-level edit costs for fuzzy matching: deleting an extra stream
/// click is cheap, inserting or substituting a pattern click is not.
struct MatchCosts {
  double deletion = 0.1;
  double insertion = 1.0;
  double substitution = 1.0;
};

struct ActionVector {
  std::string session_id;
  std::array<double, kNumCategories> weight{};
  std::array<Level, kNumCategories> level{};
  bool levels_assigned = false;
};

/// Counts every contiguous n-symbol window across the corpus and returns the
/// top k (count descending, ties by gram string ascending).
std::vector<std::pair<std::string, long long>> mine_ngrams(
    const std::vector<std::vector<ClickSymbol>>& corpus, int n = 4, int k = 100);

/// Cosine of the n-gram count vectors of pattern and stream; 0 when the
/// stream is shorter than n or shares no gram with the pattern.
double ngram_cosine(const std::vector<ClickSymbol>& pattern,
                    const std::vector<ClickSymbol>& stream, int n = 4);

/// Minimum, over every contiguous window of the stream (the empty window
/// included), of the weighted edit distance turning the window into the
/// pattern. Tokens are whole symbols, never characters.
double window_edit_distance(const std::vector<ClickSymbol>& stream,
                            const std::vector<ClickSymbol>& pattern,
                            const MatchCosts& costs = {});

/// ngram_cosine + (1 - window_edit_distance / |pattern|). Unbounded below,
/// at most 2; higher means the pattern is more characteristic of the stream.
double pattern_weight(const std::vector<ClickSymbol>& pattern,
                      const std::vector<ClickSymbol>& stream, int n = 4,
                      const MatchCosts& costs = {});

/// Sum of pattern_weight over the category's click groups.
double category_weight(const BehavioralCategory& category,
                       const std::vector<ClickSymbol>& stream, int n = 4,
                       const MatchCosts& costs = {});

/// Raw per-category weights for one stream (no levels yet).
ActionVector score_stream(const std::string& session_id,
                          const std::vector<ClickSymbol>& stream,
                          const Taxonomy& taxonomy = default_taxonomy(), int n = 4,
                          const MatchCosts& costs = {});

/// Median split: strictly above the median goes High, the rest Low.
/// Requires at least two values.
std::vector<Level> median_split(const std::vector<double>& values);

/// Assigns High/Low levels per category across the whole corpus
/// (equal-frequency dichotomization). Requires >=2 sessions.
void dichotomize(std::vector<ActionVector>& corpus);

}  // namespace clickmine
