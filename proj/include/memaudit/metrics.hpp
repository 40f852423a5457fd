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

#ifndef MEMAUDIT_METRICS_HPP_
#define MEMAUDIT_METRICS_HPP_

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "memaudit/corpus.hpp"
#include "memaudit/model.hpp"

namespace memaudit {

using NGramSizes = std::vector<std::size_t>;

inline const NGramSizes kDefaultNGramSizes = {4, 5, 6};

// Sorted, deduplicated copy. Throws std::invalid_argument when empty or n == 0.
NGramSizes normalise_sizes(std::span<const std::size_t> sizes);

// Pooled multiset of all contiguous n-grams of `seq` for every n in `sizes`.
struct NGramMultiset {
  std::map<TokenSeq, std::size_t> counts;
  NGramSizes sizes;

  std::size_t total() const;
};

NGramMultiset ngram_multiset(std::span<const Token> seq, std::span<const std::size_t> sizes);

// Sum over grams of min(count_a, count_b).
std::size_t intersection_size(const NGramMultiset& a, const NGramMultiset& b);

enum class MatchNormalisation {
  kTarget,     // |gen ∩ target| / |target|   (default)
  kGenerated,  // |gen ∩ target| / |gen|
  kUnion,      // |gen ∩ target| / |gen ∪ target|, multiset union
};

struct MatchOptions {
  MatchNormalisation normalisation = MatchNormalisation::kTarget;
  // Pool every size into one proportion; otherwise average per-size fractions.
  bool pool_sizes = true;

  bool operator==(const MatchOptions&) const = default;
};

struct MatchScore {
  double fraction = 0.0;
  // True when the denominator was empty (e.g. target shorter than every n);
  // the fraction is then 0.
  bool degenerate = false;
};

// Order-invariant n-gram overlap between a generation and its target.
MatchScore match_fraction(std::span<const Token> generated, std::span<const Token> target,
                          std::span<const std::size_t> sizes, const MatchOptions& options = {});

// Greedy decode of `suffix_length + slack` tokens from the prefix contains the
// suffix contiguously. With slack 0 this is exact equality.
bool is_k_extractable(const LanguageModel& model, const ExtractionPair& pair, std::size_t slack = 0);

struct PairScore {
  bool verbatim = false;
  double partial = 0.0;
  bool degenerate = false;
};

// Both verdicts from one greedy continuation.
PairScore score_pair(const LanguageModel& model, const ExtractionPair& pair,
                     std::span<const std::size_t> sizes, const MatchOptions& options = {},
                     std::size_t slack = 0);

std::vector<PairScore> score_pairs(const LanguageModel& model, std::span<const ExtractionPair> pairs,
                                   std::span<const std::size_t> sizes,
                                   const MatchOptions& options = {}, std::size_t slack = 0);

// 100 * extractable / pairs. Throws std::domain_error on empty input.
double mem_percent(const LanguageModel& model, std::span<const ExtractionPair> pairs,
                   std::size_t slack = 0);
// The same, separately for every prefix length present.
std::map<std::size_t, double> mem_percent_by_k(const LanguageModel& model,
                                               std::span<const ExtractionPair> pairs,
                                               std::size_t slack = 0);

// 100 * mean match_fraction(continuation, suffix). Throws std::domain_error on
// empty input.
double ngram_mem_percent(const LanguageModel& model, std::span<const ExtractionPair> pairs,
                         std::span<const std::size_t> sizes = kDefaultNGramSizes,
                         const MatchOptions& options = {}, std::size_t slack = 0);

// Aggregations over precomputed scores; throw std::domain_error when empty.
double verbatim_percent(std::span<const PairScore> scores);
double partial_percent(std::span<const PairScore> scores);

// Per-pair score trajectory; index e-1 holds epoch e.
struct SampleScoreHistory {
  std::size_t sample_id = 0;
  std::size_t k = 0;
  std::vector<double> scores;
  std::vector<bool> verbatim;

  // First epoch (1-based) with a verbatim hit.
  std::optional<std::size_t> memorisation_epoch() const;
  std::size_t epochs() const { return scores.size(); }

  bool operator==(const SampleScoreHistory&) const = default;
};

struct TransitionStats {
  std::size_t epoch = 0;  // t; the samples become memorised at t + 1
  std::size_t count = 0;
  double median = 0.0;
  double min = 0.0;
  double max = 0.0;

  bool operator==(const TransitionStats&) const = default;
};

struct ScoreRange {
  double min = 0.0;
  double max = 0.0;
  bool operator==(const ScoreRange&) const = default;
};

struct TransitionSummary {
  std::size_t epochs = 0;
  // Only epochs t that have at least one sample memorised at t + 1.
  std::vector<TransitionStats> transitions;
  // Mean epoch score of never-memorised samples; empty when there are none.
  std::vector<std::optional<double>> baseline;
  // Score range of all samples that are ever memorised, per epoch.
  std::vector<std::optional<ScoreRange>> memorised_range;
  // Number of samples first memorised at each epoch.
  std::vector<std::size_t> new_memorisations;
};

// Throws std::invalid_argument when histories disagree on the epoch count or
// have mismatched score/flag lengths.
TransitionSummary track_transitions(std::span<const SampleScoreHistory> histories);

double median(std::vector<double> values);

}  // namespace memaudit

#endif  // MEMAUDIT_METRICS_HPP_
