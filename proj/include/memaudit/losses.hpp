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

#ifndef MEMAUDIT_LOSSES_HPP_
#define MEMAUDIT_LOSSES_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "memaudit/metrics.hpp"
#include "memaudit/model.hpp"

namespace memaudit {

enum class LossMode { kPlain, kNGramReg, kGoldfish };

const char* loss_mode_name(LossMode mode);
LossMode parse_loss_mode(std::string_view name);

struct LossConfig {
  LossMode mode = LossMode::kPlain;
  // Defaults for lambda and tau are free choices; sweep them.
  double lambda = 1.0;
  double tau = 0.05;
  NGramSizes sizes = kDefaultNGramSizes;
  // Drop one position in `goldfish_period`; nullopt never drops.
  std::optional<std::uint64_t> goldfish_period;

  // Throws std::invalid_argument on negative lambda/tau, empty or zero sizes,
  // or a zero period.
  void validate() const;

  bool operator==(const LossConfig&) const = default;
};

struct LossValue {
  double total = 0.0;
  double lm_term = 0.0;
  double reg_term = 0.0;
  Gradient gradient;
  // Penalty grams scored and how many had a positive hinge.
  std::size_t grams = 0;
  std::size_t active_hinges = 0;
  // Positions that contributed cross-entropy.
  std::size_t supervised_positions = 0;
};

// Summed next-token NLL over positions 2..T with windowed context, plus its
// exact gradient. Throws std::domain_error for samples shorter than 2.
LossValue lm_loss(const ModelParams& params, std::span<const Token> sample);

// Per-position reference log-probabilities, computed once per sample id.
// Not thread-safe.
class ReferenceCache {
 public:
  explicit ReferenceCache(ReferenceSnapshot snapshot) : snapshot_(std::move(snapshot)) {}

  const ReferenceSnapshot& snapshot() const { return snapshot_; }
  std::span<const double> log_probs(std::size_t sample_id, std::span<const Token> sample);
  std::size_t size() const { return cache_.size(); }

 private:
  struct Entry {
    TokenSeq tokens;
    std::vector<double> log_probs;
  };
  ReferenceSnapshot snapshot_;
  std::unordered_map<std::size_t, Entry> cache_;
};

// lambda * sum_g max(0, p(g) - p_ref(g) - tau)^2 over every contiguous n-gram of
// the sample (n in cfg.sizes), each conditioned on its in-sample left context.
// Only reg_term and the gradient through `params` are populated.
LossValue ngram_reg_penalty(const ModelParams& params, const ReferenceSnapshot& reference,
                            std::span<const Token> sample, const LossConfig& cfg);
LossValue ngram_reg_penalty(const ModelParams& params, std::span<const double> reference_log_probs,
                            std::span<const Token> sample, const LossConfig& cfg);

// Whether position `t` (0-based) of sample `sample_id` is supervised.
bool goldfish_keep(std::size_t sample_id, std::size_t position, std::uint64_t seed,
                   std::optional<std::uint64_t> period);

// Cross-entropy over kept positions only.
LossValue goldfish_loss(const ModelParams& params, std::span<const Token> sample,
                        std::size_t sample_id, const LossConfig& cfg, std::uint64_t seed);

// Dispatches on cfg.mode: plain -> lm, ngram_reg -> lm + penalty,
// goldfish -> goldfish only. `cache` is required for ngram_reg.
LossValue total_loss(const ModelParams& params, ReferenceCache* cache, std::span<const Token> sample,
                     std::size_t sample_id, const LossConfig& cfg, std::uint64_t seed);
LossValue total_loss(const ModelParams& params, const ReferenceSnapshot& reference,
                     std::span<const Token> sample, std::size_t sample_id, const LossConfig& cfg,
                     std::uint64_t seed);

using LossEvaluator = std::function<LossValue(const ModelParams&)>;

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_coordinate = 0;
  std::size_t probes = 0;
};

// Compares the analytic gradient with central differences at `probes` seeded
// random coordinates. Relative error uses max(|analytic|, |numeric|, 1e-12).
// Throws NumericError naming the coordinate if a probe yields a non-finite loss.
GradientCheckResult finite_diff_check(const LossEvaluator& evaluator, const ModelParams& params,
                                      std::size_t probes, double step, std::uint64_t seed = 0);

}  // namespace memaudit

#endif  // MEMAUDIT_LOSSES_HPP_
