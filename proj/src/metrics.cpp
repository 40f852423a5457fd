// Copyright 2026 The memaudit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "memaudit/metrics.hpp"

#include <algorithm>
#include <stdexcept>

namespace memaudit {

namespace {

double ratio(std::size_t num, std::size_t den) {
  return static_cast<double>(num) / static_cast<double>(den);
}

std::size_t union_size(const NGramMultiset& a, const NGramMultiset& b) {
  std::size_t total = a.total() + b.total();
  return total - intersection_size(a, b);
}

MatchScore normalised(const NGramMultiset& gen, const NGramMultiset& target,
                      MatchNormalisation normalisation) {
  const std::size_t inter = intersection_size(gen, target);
  std::size_t den = 0;
  switch (normalisation) {
    case MatchNormalisation::kTarget:
      den = target.total();
      break;
    case MatchNormalisation::kGenerated:
      den = gen.total();
      break;
    case MatchNormalisation::kUnion:
      den = union_size(gen, target);
      break;
  }
  if (den == 0) return {0.0, true};
  return {ratio(inter, den), false};
}

void require_pairs(std::span<const ExtractionPair> pairs) {
  if (pairs.empty()) throw std::domain_error("memorisation rate of an empty pair set is undefined");
}

}  // namespace

NGramSizes normalise_sizes(std::span<const std::size_t> sizes) {
  if (sizes.empty()) throw std::invalid_argument("n-gram size set must be non-empty");
  NGramSizes out(sizes.begin(), sizes.end());
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  if (out.front() == 0) throw std::invalid_argument("n-gram sizes must be >= 1");
  return out;
}

std::size_t NGramMultiset::total() const {
  std::size_t n = 0;
  for (const auto& [gram, count] : counts) n += count;
  return n;
}

NGramMultiset ngram_multiset(std::span<const Token> seq, std::span<const std::size_t> sizes) {
  NGramMultiset result;
  result.sizes = normalise_sizes(sizes);
  for (std::size_t n : result.sizes) {
    if (seq.size() < n) continue;
    for (std::size_t i = 0; i + n <= seq.size(); ++i) {
      ++result.counts[TokenSeq(seq.begin() + i, seq.begin() + i + n)];
    }
  }
  return result;
}

std::size_t intersection_size(const NGramMultiset& a, const NGramMultiset& b) {
  // Merge walk over two sorted maps.
  std::size_t total = 0;
  auto ia = a.counts.begin();
  auto ib = b.counts.begin();
  while (ia != a.counts.end() && ib != b.counts.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      total += std::min(ia->second, ib->second);
      ++ia;
      ++ib;
    }
  }
  return total;
}

MatchScore match_fraction(std::span<const Token> generated, std::span<const Token> target,
                          std::span<const std::size_t> sizes, const MatchOptions& options) {
  const NGramSizes normal = normalise_sizes(sizes);
  if (options.pool_sizes) {
    return normalised(ngram_multiset(generated, normal), ngram_multiset(target, normal),
                      options.normalisation);
  }
  double sum = 0.0;
  std::size_t used = 0;
  for (std::size_t n : normal) {
    const std::size_t one[] = {n};
    const MatchScore s =
        normalised(ngram_multiset(generated, one), ngram_multiset(target, one), options.normalisation);
    if (s.degenerate) continue;
    sum += s.fraction;
    ++used;
  }
  if (used == 0) return {0.0, true};
  return {sum / static_cast<double>(used), false};
}

bool is_k_extractable(const LanguageModel& model, const ExtractionPair& pair, std::size_t slack) {
  const TokenSeq generated = greedy_decode(model, pair.prefix, pair.suffix.size() + slack);
  return std::search(generated.begin(), generated.end(), pair.suffix.begin(), pair.suffix.end()) !=
         generated.end();
}

PairScore score_pair(const LanguageModel& model, const ExtractionPair& pair,
                     std::span<const std::size_t> sizes, const MatchOptions& options,
                     std::size_t slack) {
  const TokenSeq generated = greedy_decode(model, pair.prefix, pair.suffix.size() + slack);
  PairScore score;
  score.verbatim = std::search(generated.begin(), generated.end(), pair.suffix.begin(),
                               pair.suffix.end()) != generated.end();
  const MatchScore match = match_fraction(generated, pair.suffix, sizes, options);
  score.partial = match.fraction;
  score.degenerate = match.degenerate;
  return score;
}

std::vector<PairScore> score_pairs(const LanguageModel& model, std::span<const ExtractionPair> pairs,
                                   std::span<const std::size_t> sizes, const MatchOptions& options,
                                   std::size_t slack) {
  std::vector<PairScore> scores;
  scores.reserve(pairs.size());
  for (const auto& pair : pairs) scores.push_back(score_pair(model, pair, sizes, options, slack));
  return scores;
}

double mem_percent(const LanguageModel& model, std::span<const ExtractionPair> pairs,
                   std::size_t slack) {
  require_pairs(pairs);
  std::size_t hits = 0;
  for (const auto& pair : pairs) hits += is_k_extractable(model, pair, slack) ? 1 : 0;
  return 100.0 * ratio(hits, pairs.size());
}

std::map<std::size_t, double> mem_percent_by_k(const LanguageModel& model,
                                               std::span<const ExtractionPair> pairs,
                                               std::size_t slack) {
  require_pairs(pairs);
  std::map<std::size_t, std::pair<std::size_t, std::size_t>> tally;  // k -> (hits, total)
  for (const auto& pair : pairs) {
    auto& [hits, total] = tally[pair.k()];
    hits += is_k_extractable(model, pair, slack) ? 1 : 0;
    ++total;
  }
  std::map<std::size_t, double> out;
  for (const auto& [k, t] : tally) out[k] = 100.0 * ratio(t.first, t.second);
  return out;
}

double ngram_mem_percent(const LanguageModel& model, std::span<const ExtractionPair> pairs,
                         std::span<const std::size_t> sizes, const MatchOptions& options,
                         std::size_t slack) {
  require_pairs(pairs);
  return partial_percent(score_pairs(model, pairs, sizes, options, slack));
}

double verbatim_percent(std::span<const PairScore> scores) {
  if (scores.empty()) throw std::domain_error("memorisation rate of an empty pair set is undefined");
  std::size_t hits = 0;
  for (const auto& s : scores) hits += s.verbatim ? 1 : 0;
  return 100.0 * ratio(hits, scores.size());
}

double partial_percent(std::span<const PairScore> scores) {
  if (scores.empty()) throw std::domain_error("memorisation rate of an empty pair set is undefined");
  double sum = 0.0;
  for (const auto& s : scores) sum += s.partial;
  return 100.0 * sum / static_cast<double>(scores.size());
}

std::optional<std::size_t> SampleScoreHistory::memorisation_epoch() const {
  for (std::size_t e = 0; e < verbatim.size(); ++e) {
    if (verbatim[e]) return e + 1;
  }
  return std::nullopt;
}

double median(std::vector<double> values) {
  if (values.empty()) throw std::domain_error("median of an empty set");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

TransitionSummary track_transitions(std::span<const SampleScoreHistory> histories) {
  TransitionSummary summary;
  if (histories.empty()) return summary;
  const std::size_t epochs = histories.front().epochs();
  for (const auto& h : histories) {
    if (h.scores.size() != h.verbatim.size()) {
      throw std::invalid_argument("history has mismatched score and flag lengths");
    }
    if (h.epochs() != epochs) throw std::invalid_argument("histories cover different epoch ranges");
  }
  summary.epochs = epochs;
  summary.baseline.resize(epochs);
  summary.memorised_range.resize(epochs);
  summary.new_memorisations.assign(epochs, 0);

  std::vector<std::vector<double>> precursor(epochs);
  std::vector<double> baseline_sum(epochs, 0.0);
  std::size_t never = 0;
  for (const auto& h : histories) {
    const auto mem_epoch = h.memorisation_epoch();
    if (!mem_epoch) {
      ++never;
      for (std::size_t e = 0; e < epochs; ++e) baseline_sum[e] += h.scores[e];
      continue;
    }
    ++summary.new_memorisations[*mem_epoch - 1];
    if (*mem_epoch >= 2) precursor[*mem_epoch - 2].push_back(h.scores[*mem_epoch - 2]);
    for (std::size_t e = 0; e < epochs; ++e) {
      auto& range = summary.memorised_range[e];
      if (!range) {
        range = ScoreRange{h.scores[e], h.scores[e]};
      } else {
        range->min = std::min(range->min, h.scores[e]);
        range->max = std::max(range->max, h.scores[e]);
      }
    }
  }
  if (never > 0) {
    for (std::size_t e = 0; e < epochs; ++e) {
      summary.baseline[e] = baseline_sum[e] / static_cast<double>(never);
    }
  }
  for (std::size_t t = 0; t < epochs; ++t) {
    const auto& scores = precursor[t];
    if (scores.empty()) continue;
    const auto [lo, hi] = std::minmax_element(scores.begin(), scores.end());
    summary.transitions.push_back({t + 1, scores.size(), median(scores), *lo, *hi});
  }
  return summary;
}

}  // namespace memaudit
