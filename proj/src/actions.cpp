#include "clickmine/actions.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "clickmine/stats.hpp"

namespace clickmine {

const char* category_name(Category c) {
  switch (c) {
    case Category::Rewatch: return "Rewatch";
    case Category::Skipping: return "Skipping";
    case Category::FastWatching: return "FastWatching";
    case Category::SlowWatching: return "SlowWatching";
    case Category::ClearConcept: return "ClearConcept";
    case Category::CheckbackReference: return "CheckbackReference";
    case Category::PlayrateTransition: return "PlayrateTransition";
  }
  return "?";
}

namespace {

std::vector<std::vector<ClickSymbol>> parse_patterns(std::initializer_list<const char*> strs) {
  std::vector<std::vector<ClickSymbol>> out;
  for (const char* s : strs) out.push_back(tokenize(s));
  return out;
}

Taxonomy make_default_taxonomy() {
  Taxonomy t;
  t[0] = {"Rewatch",
          parse_patterns({"PlPaSbPl", "PlSbPaPl", "PaSbPlSb", "SbSbPaPl", "SbPaPlPa", "PaPlSbPa"})};
  t[1] = {"Skipping",
          parse_patterns({"SfSfSfSf", "PaPlSfSf", "PlSfSfSf", "SfSfSfPa", "SfSfPaPl", "SfSfSfSSf",
                          "SfSfSSfSf", "SfPaPlPa", "PlPaPlSf"})};
  t[2] = {"FastWatching",
          parse_patterns({"PaPlRfRf", "RfPaPlPa", "RfRfPaPl", "RsPaPlRf", "PlPaPlRf"})};
  t[3] = {"SlowWatching",
          parse_patterns({"RsRsPaPl", "RsPaPlPa", "PaPlRsRs", "PlPaPlRs", "PaPlRsPa", "PlRsPaPl"})};
  t[4] = {"ClearConcept", parse_patterns({"PaSbPlSSb", "SSbSbPaPl", "PaPlSSbSb", "PlSSbSbPa"})};
  t[5] = {"CheckbackReference",
          parse_patterns({"SbSbSbSb", "PlSbSbSb", "SbSbSbPa", "SbSbSbSf", "SfSbSbSb", "SbPlSbSb",
                          "SSbSbSbSb"})};
  t[6] = {"PlayrateTransition",
          parse_patterns({"RfRfRsRs", "RfRfRfRs", "RfRsRsRs", "RsRsRsRf", "RsRsRfRf", "RfRfRfRf"})};
  return t;
}

std::string gram_key(const std::vector<ClickSymbol>& seq, std::size_t pos, int n) {
  std::string key;
  for (int j = 0; j < n; ++j) key += symbol_name(seq[pos + j]);
  return key;
}

std::map<std::string, long long> gram_counts(const std::vector<ClickSymbol>& seq, int n) {
  std::map<std::string, long long> counts;
  if (n >= 1 && seq.size() >= static_cast<std::size_t>(n))
    for (std::size_t i = 0; i + n <= seq.size(); ++i) ++counts[gram_key(seq, i, n)];
  return counts;
}

}  // namespace

const Taxonomy& default_taxonomy() {
  static const Taxonomy t = make_default_taxonomy();
  return t;
}

std::vector<std::pair<std::string, long long>> mine_ngrams(
    const std::vector<std::vector<ClickSymbol>>& corpus, int n, int k) {
  if (n < 1) throw std::invalid_argument("mine_ngrams: n must be >= 1");
  if (k < 1) throw std::invalid_argument("mine_ngrams: k must be >= 1");
  std::map<std::string, long long> counts;
  for (const auto& seq : corpus)
    for (const auto& [gram, c] : gram_counts(seq, n)) counts[gram] += c;

  std::vector<std::pair<std::string, long long>> ranked(counts.begin(), counts.end());
  std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
    if (a.second != b.second) return a.second > b.second;
    return a.first < b.first;
  });
  if (ranked.size() > static_cast<std::size_t>(k)) ranked.resize(k);
  return ranked;
}

double ngram_cosine(const std::vector<ClickSymbol>& pattern,
                    const std::vector<ClickSymbol>& stream, int n) {
  if (pattern.size() < static_cast<std::size_t>(n))
    throw std::invalid_argument("ngram_cosine: pattern shorter than n");
  const auto pc = gram_counts(pattern, n);
  const auto sc = gram_counts(stream, n);
  if (sc.empty()) return 0.0;

  double dot = 0.0, np = 0.0, ns = 0.0;
  for (const auto& [g, c] : pc) {
    np += static_cast<double>(c) * c;
    auto it = sc.find(g);
    if (it != sc.end()) dot += static_cast<double>(c) * it->second;
  }
  for (const auto& [g, c] : sc) ns += static_cast<double>(c) * c;
  if (dot == 0.0) return 0.0;
  return dot / (std::sqrt(np) * std::sqrt(ns));
}

double window_edit_distance(const std::vector<ClickSymbol>& stream,
                            const std::vector<ClickSymbol>& pattern,
                            const MatchCosts& costs) {
  if (pattern.empty()) throw std::invalid_argument("window_edit_distance: empty pattern");
  const std::size_t m = pattern.size();
  // d[j] = cheapest transformation of some window ending at the current
  // stream position into pattern[0..j). Seeding d[0] = 0 at every position
  // makes window starts free; the minimum over positions makes ends free.
  std::vector<double> d(m + 1), prev(m + 1);
  for (std::size_t j = 0; j <= m; ++j) d[j] = static_cast<double>(j) * costs.insertion;
  double best = d[m];  // empty window
  for (std::size_t i = 0; i < stream.size(); ++i) {
    prev.swap(d);
    d[0] = 0.0;
    for (std::size_t j = 1; j <= m; ++j) {
      const double sub = prev[j - 1] + (stream[i] == pattern[j - 1] ? 0.0 : costs.substitution);
      const double del = prev[j] + costs.deletion;
      const double ins = d[j - 1] + costs.insertion;
      d[j] = std::min(sub, std::min(del, ins));
    }
    best = std::min(best, d[m]);
  }
  return best;
}

double pattern_weight(const std::vector<ClickSymbol>& pattern,
                      const std::vector<ClickSymbol>& stream, int n,
                      const MatchCosts& costs) {
  const double cos = ngram_cosine(pattern, stream, n);
  const double dist = window_edit_distance(stream, pattern, costs);
  return cos + (1.0 - dist / static_cast<double>(pattern.size()));
}

double category_weight(const BehavioralCategory& category,
                       const std::vector<ClickSymbol>& stream, int n,
                       const MatchCosts& costs) {
  if (category.patterns.empty())
    throw std::invalid_argument("category '" + category.name + "' has no patterns");
  double sum = 0.0;
  for (const auto& p : category.patterns) sum += pattern_weight(p, stream, n, costs);
  return sum;
}

ActionVector score_stream(const std::string& session_id,
                          const std::vector<ClickSymbol>& stream, const Taxonomy& taxonomy,
                          int n, const MatchCosts& costs) {
  ActionVector v;
  v.session_id = session_id;
  for (int c = 0; c < kNumCategories; ++c)
    v.weight[c] = category_weight(taxonomy[c], stream, n, costs);
  return v;
}

std::vector<Level> median_split(const std::vector<double>& values) {
  if (values.size() < 2)
    throw std::invalid_argument("median_split needs at least two values");
  const double med = median(values);
  std::vector<Level> out;
  out.reserve(values.size());
  for (double v : values) out.push_back(v > med ? Level::High : Level::Low);
  return out;
}

void dichotomize(std::vector<ActionVector>& corpus) {
  if (corpus.size() < 2)
    throw std::invalid_argument("dichotomize needs at least two sessions");
  for (int c = 0; c < kNumCategories; ++c) {
    std::vector<double> w;
    w.reserve(corpus.size());
    for (const auto& v : corpus) w.push_back(v.weight[c]);
    const auto levels = median_split(w);
    for (std::size_t i = 0; i < corpus.size(); ++i) corpus[i].level[c] = levels[i];
  }
  for (auto& v : corpus) v.levels_assigned = true;
}

}  // namespace clickmine
