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

#include "memaudit/losses.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "memaudit/errors.hpp"
#include "memaudit/random.hpp"

namespace memaudit {

namespace {

void require_predictable(std::span<const Token> sample) {
  if (sample.size() < 2) {
    throw std::domain_error("sample of length " + std::to_string(sample.size()) +
                            " has no position to predict");
  }
}

// Hinge terms of the n-gram penalty. Adds -d(penalty)/d(log p_i) into
// `weights` so that a backward pass with those weights yields the penalty
// gradient (backward differentiates -log p).
struct PenaltyTerms {
  double value = 0.0;
  std::size_t grams = 0;
  std::size_t active = 0;
};

PenaltyTerms accumulate_penalty(std::span<const double> log_probs,
                                std::span<const double> reference_log_probs, const LossConfig& cfg,
                                std::span<double> weights) {
  PenaltyTerms terms;
  const std::size_t length = log_probs.size();
  for (std::size_t n : cfg.sizes) {
    if (n > length) continue;
    for (std::size_t start = 0; start + n <= length; ++start) {
      double lp = 0.0;
      double lp_ref = 0.0;
      for (std::size_t i = start; i < start + n; ++i) {
        lp += log_probs[i];
        lp_ref += reference_log_probs[i];
      }
      ++terms.grams;
      const double p = std::exp(lp);
      const double hinge = p - std::exp(lp_ref) - cfg.tau;
      if (hinge <= 0.0) continue;
      ++terms.active;
      terms.value += cfg.lambda * hinge * hinge;
      // d/d(log p_i) of lambda*hinge^2 is 2*lambda*hinge*p for every i in g.
      const double coeff = 2.0 * cfg.lambda * hinge * p;
      for (std::size_t i = start; i < start + n; ++i) weights[i] -= coeff;
    }
  }
  return terms;
}

std::vector<double> reference_position_log_probs(const ReferenceSnapshot& reference,
                                                 std::span<const Token> sample) {
  const SequenceActivations acts(reference.params(), sample);
  return {acts.log_probs().begin(), acts.log_probs().end()};
}

}  // namespace

const char* loss_mode_name(LossMode mode) {
  switch (mode) {
    case LossMode::kPlain:
      return "plain";
    case LossMode::kNGramReg:
      return "ngram_reg";
    case LossMode::kGoldfish:
      return "goldfish";
  }
  return "?";
}

LossMode parse_loss_mode(std::string_view name) {
  for (LossMode m : {LossMode::kPlain, LossMode::kNGramReg, LossMode::kGoldfish}) {
    if (name == loss_mode_name(m)) return m;
  }
  throw std::invalid_argument("unknown loss mode: " + std::string(name));
}

void LossConfig::validate() const {
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be >= 0");
  if (!(tau >= 0.0) || !std::isfinite(tau)) throw std::invalid_argument("tau must be >= 0");
  normalise_sizes(sizes);
  if (goldfish_period && *goldfish_period == 0) {
    throw std::invalid_argument("goldfish period must be >= 1");
  }
}

LossValue lm_loss(const ModelParams& params, std::span<const Token> sample) {
  require_predictable(sample);
  const SequenceActivations acts(params, sample);
  std::vector<double> weights(sample.size(), 1.0);
  weights[0] = 0.0;

  LossValue out;
  for (std::size_t i = 1; i < sample.size(); ++i) out.lm_term -= acts.log_prob(i);
  out.total = out.lm_term;
  out.supervised_positions = sample.size() - 1;
  out.gradient.assign(params.size(), 0.0);
  acts.backward(params, weights, out.gradient);
  return out;
}

std::span<const double> ReferenceCache::log_probs(std::size_t sample_id,
                                                  std::span<const Token> sample) {
  auto it = cache_.find(sample_id);
  if (it != cache_.end()) {
    if (!std::equal(it->second.tokens.begin(), it->second.tokens.end(), sample.begin(),
                    sample.end())) {
      throw std::invalid_argument("sample id " + std::to_string(sample_id) +
                                  " reused with different tokens");
    }
    return it->second.log_probs;
  }
  Entry entry{TokenSeq(sample.begin(), sample.end()),
              reference_position_log_probs(snapshot_, sample)};
  return cache_.emplace(sample_id, std::move(entry)).first->second.log_probs;
}

LossValue ngram_reg_penalty(const ModelParams& params, const ReferenceSnapshot& reference,
                            std::span<const Token> sample, const LossConfig& cfg) {
  const auto ref = reference_position_log_probs(reference, sample);
  return ngram_reg_penalty(params, ref, sample, cfg);
}

LossValue ngram_reg_penalty(const ModelParams& params, std::span<const double> reference_log_probs,
                            std::span<const Token> sample, const LossConfig& cfg) {
  if (cfg.mode != LossMode::kNGramReg) {
    throw std::invalid_argument("n-gram penalty requires mode ngram_reg");
  }
  cfg.validate();
  if (reference_log_probs.size() != sample.size()) {
    throw std::invalid_argument("reference log-probs do not match the sample length");
  }
  LossValue out;
  out.gradient.assign(params.size(), 0.0);
  if (sample.empty()) return out;

  const SequenceActivations acts(params, sample);
  std::vector<double> weights(sample.size(), 0.0);
  const PenaltyTerms terms = accumulate_penalty(acts.log_probs(), reference_log_probs, cfg, weights);
  out.reg_term = terms.value;
  out.total = terms.value;
  out.grams = terms.grams;
  out.active_hinges = terms.active;
  if (terms.active > 0) acts.backward(params, weights, out.gradient);
  return out;
}

bool goldfish_keep(std::size_t sample_id, std::size_t position, std::uint64_t seed,
                   std::optional<std::uint64_t> period) {
  if (!period) return true;
  return hash_combine(hash_combine(seed, sample_id), position) % *period != 0;
}

LossValue goldfish_loss(const ModelParams& params, std::span<const Token> sample,
                        std::size_t sample_id, const LossConfig& cfg, std::uint64_t seed) {
  if (cfg.mode != LossMode::kGoldfish) {
    throw std::invalid_argument("goldfish loss requires mode goldfish");
  }
  cfg.validate();
  if (!cfg.goldfish_period) return lm_loss(params, sample);
  require_predictable(sample);

  const SequenceActivations acts(params, sample);
  std::vector<double> weights(sample.size(), 0.0);
  LossValue out;
  for (std::size_t i = 1; i < sample.size(); ++i) {
    if (!goldfish_keep(sample_id, i, seed, cfg.goldfish_period)) continue;
    weights[i] = 1.0;
    out.lm_term -= acts.log_prob(i);
    ++out.supervised_positions;
  }
  out.total = out.lm_term;
  out.gradient.assign(params.size(), 0.0);
  if (out.supervised_positions > 0) acts.backward(params, weights, out.gradient);
  return out;
}

LossValue total_loss(const ModelParams& params, ReferenceCache* cache, std::span<const Token> sample,
                     std::size_t sample_id, const LossConfig& cfg, std::uint64_t seed) {
  switch (cfg.mode) {
    case LossMode::kPlain:
      return lm_loss(params, sample);
    case LossMode::kGoldfish:
      return goldfish_loss(params, sample, sample_id, cfg, seed);
    case LossMode::kNGramReg:
      break;
  }
  if (cache == nullptr) throw std::invalid_argument("ngram_reg loss needs a reference model");
  cfg.validate();
  require_predictable(sample);
  const auto ref = cache->log_probs(sample_id, sample);

  // One forward pass serves both terms; their position weights add.
  const SequenceActivations acts(params, sample);
  std::vector<double> weights(sample.size(), 1.0);
  weights[0] = 0.0;
  LossValue out;
  for (std::size_t i = 1; i < sample.size(); ++i) out.lm_term -= acts.log_prob(i);
  const PenaltyTerms terms = accumulate_penalty(acts.log_probs(), ref, cfg, weights);
  out.reg_term = terms.value;
  out.total = out.lm_term + out.reg_term;
  out.grams = terms.grams;
  out.active_hinges = terms.active;
  out.supervised_positions = sample.size() - 1;
  out.gradient.assign(params.size(), 0.0);
  acts.backward(params, weights, out.gradient);
  return out;
}

LossValue total_loss(const ModelParams& params, const ReferenceSnapshot& reference,
                     std::span<const Token> sample, std::size_t sample_id, const LossConfig& cfg,
                     std::uint64_t seed) {
  ReferenceCache cache(reference);
  return total_loss(params, &cache, sample, sample_id, cfg, seed);
}

GradientCheckResult finite_diff_check(const LossEvaluator& evaluator, const ModelParams& params,
                                      std::size_t probes, double step, std::uint64_t seed) {
  if (!(step > 0.0)) throw std::invalid_argument("finite-difference step must be > 0");
  if (probes == 0) throw std::invalid_argument("at least one probe is required");

  const LossValue base = evaluator(params);
  if (base.gradient.size() != params.size()) {
    throw std::invalid_argument("evaluator gradient does not match the parameter count");
  }

  std::vector<std::size_t> coords(params.size());
  std::iota(coords.begin(), coords.end(), std::size_t{0});
  const std::size_t count = std::min(probes, coords.size());
  Rng rng(seed);
  for (std::size_t i = 0; i < count; ++i) {
    std::swap(coords[i], coords[i + rng.below(coords.size() - i)]);
  }

  GradientCheckResult result;
  result.probes = count;
  ModelParams probe = params;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t c = coords[i];
    const double original = params.values()[c];
    probe.values()[c] = original + step;
    const double plus = evaluator(probe).total;
    probe.values()[c] = original - step;
    const double minus = evaluator(probe).total;
    probe.values()[c] = original;
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      throw NumericError("non-finite loss while probing coordinate " + std::to_string(c));
    }
    const double numeric = (plus - minus) / (2.0 * step);
    const double analytic = base.gradient[c];
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-12});
    const double err = std::abs(analytic - numeric) / denom;
    if (i == 0 || err > result.max_relative_error) {
      result.max_relative_error = err;
      result.worst_coordinate = c;
    }
  }
  return result;
}

}  // namespace memaudit
