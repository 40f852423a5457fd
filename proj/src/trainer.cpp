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

#include "memaudit/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "memaudit/config.hpp"
#include "memaudit/errors.hpp"
#include "memaudit/random.hpp"

namespace memaudit {

namespace {

// Salts that separate the streams derived from one run seed.
constexpr std::uint64_t kShuffleSalt = 0x5348554646ULL;
constexpr std::uint64_t kPairSalt = 0x5041495253ULL;
constexpr std::uint64_t kGoldfishSalt = 0x474f4c44ULL;

bool all_finite(std::span<const double> values) {
  return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

}  // namespace

const char* stop_variant_name(StopVariant variant) {
  switch (variant) {
    case StopVariant::kBestVal:
      return "best_val";
    case StopVariant::kBestAcc:
      return "best_acc";
    case StopVariant::kNGramThreshold:
      return "ngram_threshold";
  }
  return "?";
}

const char* step_reduction_name(StepReduction reduction) {
  return reduction == StepReduction::kSum ? "sum" : "mean";
}

StepReduction parse_step_reduction(std::string_view name) {
  if (name == "sum") return StepReduction::kSum;
  if (name == "mean") return StepReduction::kMean;
  throw std::invalid_argument("unknown step reduction: " + std::string(name));
}

StopVariant parse_stop_variant(std::string_view name) {
  for (auto v : {StopVariant::kBestVal, StopVariant::kBestAcc, StopVariant::kNGramThreshold}) {
    if (name == stop_variant_name(v)) return v;
  }
  throw std::invalid_argument("unknown stop criterion: " + std::string(name));
}

void StopCriterion::validate() const {
  if (!(threshold >= 0.0 && threshold <= 100.0)) {
    throw std::invalid_argument("threshold must lie in [0, 100]");
  }
}

void TrainConfig::validate() const {
  model.validate();
  loss.validate();
  stop.validate();
  if (max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
  if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate)) {
    throw std::invalid_argument("learning_rate must be finite and >= 0");
  }
  if (k_values.empty()) throw std::invalid_argument("k_values must be non-empty");
  for (std::size_t k : k_values) {
    if (k < 1) throw std::invalid_argument("every k must be >= 1");
  }
  if (suffix_length < 1) throw std::invalid_argument("suffix_len must be >= 1");
  if (!(max_grad_norm >= 0.0) || !std::isfinite(max_grad_norm)) {
    throw std::invalid_argument("max_grad_norm must be finite and >= 0");
  }
  normalise_sizes(ngram_sizes);
}

void TrainConfig::set_run_seed(std::uint64_t seed) {
  model.seed = seed;
  shuffle_seed = hash_combine(seed, kShuffleSalt);
  pair_seed = hash_combine(seed, kPairSalt);
  goldfish_seed = hash_combine(seed, kGoldfishSalt);
}

double EpochMetrics::mean_mem_percent() const {
  if (mem_percent.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& [k, v] : mem_percent) sum += v;
  return sum / static_cast<double>(mem_percent.size());
}

bool RunReport::operator==(const RunReport& o) const {
  return config_echo == o.config_echo && epochs == o.epochs && histories == o.histories &&
         pair_stats == o.pair_stats && selected == o.selected &&
         selected_epoch == o.selected_epoch && halted_early == o.halted_early &&
         train_samples == o.train_samples && train_source_records == o.train_source_records &&
         skipped_short_steps == o.skipped_short_steps &&
         fully_dropped_steps == o.fully_dropped_steps;
}

double validation_perplexity(const ModelParams& params, const Corpus& corpus) {
  double nll = 0.0;
  std::size_t tokens = 0;
  for (const auto& sample : corpus.samples) {
    if (sample.size() < 2) continue;
    const SequenceActivations acts(params, sample);
    for (std::size_t i = 1; i < sample.size(); ++i) nll -= acts.log_prob(i);
    tokens += sample.size() - 1;
  }
  if (tokens == 0) throw std::domain_error("validation corpus has no predictable tokens");
  return std::exp(nll / static_cast<double>(tokens));
}

double final_token_accuracy(const ModelParams& params, const Corpus& corpus) {
  const WindowModel model(params);
  std::size_t hits = 0;
  std::size_t total = 0;
  for (const auto& sample : corpus.samples) {
    if (sample.size() < 2) continue;
    const auto context = std::span<const Token>(sample).first(sample.size() - 1);
    hits += greedy_decode(model, context, 1).front() == sample.back() ? 1 : 0;
    ++total;
  }
  if (total == 0) throw std::domain_error("validation corpus has no scorable samples");
  return static_cast<double>(hits) / static_cast<double>(total);
}

Evaluation evaluate(const ModelParams& params, const Corpus& val_corpus,
                    std::span<const ExtractionPair> pairs, const TrainConfig& cfg) {
  if (val_corpus.empty()) throw std::domain_error("empty validation corpus");
  if (pairs.empty()) throw std::domain_error("empty extraction pair set");

  Evaluation out;
  const WindowModel model(params);
  out.pair_scores = score_pairs(model, pairs, cfg.ngram_sizes, cfg.match, cfg.slack);

  std::map<std::size_t, std::vector<PairScore>> by_k;
  for (std::size_t i = 0; i < pairs.size(); ++i) by_k[pairs[i].k()].push_back(out.pair_scores[i]);
  for (const auto& [k, scores] : by_k) {
    out.metrics.mem_percent[k] = verbatim_percent(scores);
    out.metrics.ngram_mem_by_k[k] = partial_percent(scores);
  }
  out.metrics.ngram_mem_percent = partial_percent(out.pair_scores);
  out.metrics.val_perplexity = validation_perplexity(params, val_corpus);
  out.metrics.eval_accuracy = final_token_accuracy(params, val_corpus);
  return out;
}

std::size_t select_epoch(std::span<const EpochMetrics> history, const StopCriterion& criterion) {
  if (history.empty()) throw std::invalid_argument("cannot select from an empty history");
  std::size_t best = 0;
  switch (criterion.variant) {
    case StopVariant::kBestVal:
      for (std::size_t i = 1; i < history.size(); ++i) {
        if (history[i].val_perplexity < history[best].val_perplexity) best = i;
      }
      break;
    case StopVariant::kBestAcc:
      for (std::size_t i = 1; i < history.size(); ++i) {
        if (history[i].eval_accuracy > history[best].eval_accuracy) best = i;
      }
      break;
    case StopVariant::kNGramThreshold:
      for (std::size_t i = 0; i < history.size(); ++i) {
        if (history[i].ngram_mem_percent <= criterion.threshold) best = i;
      }
      break;
  }
  return history[best].epoch != 0 ? history[best].epoch : best + 1;
}

EpochTrainStats train_epoch(ModelParams& params, const Corpus& corpus, const TrainConfig& cfg,
                            std::size_t epoch, ReferenceCache* reference, const TrainHooks& hooks,
                            std::size_t first_step) {
  if (corpus.empty()) throw std::invalid_argument("cannot train on an empty corpus");
  std::vector<std::size_t> order(corpus.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(hash_combine(cfg.shuffle_seed, epoch));
  rng.shuffle(std::span<std::size_t>(order));

  EpochTrainStats stats;
  double loss_sum = 0.0;
  for (std::size_t id : order) {
    const TokenSeq& sample = corpus.samples[id];
    if (sample.size() < 2) {
      ++stats.skipped_short;
      continue;
    }
    const LossValue loss = total_loss(params, reference, sample, id, cfg.loss, cfg.goldfish_seed);
    if (!std::isfinite(loss.total) || !all_finite(loss.gradient)) {
      throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", sample " +
                         std::to_string(id));
    }
    if (cfg.loss.mode == LossMode::kGoldfish && loss.supervised_positions == 0) {
      ++stats.fully_dropped;
    }
    double scale = 1.0;
    if (cfg.reduction == StepReduction::kMean && loss.supervised_positions > 0) {
      scale = 1.0 / static_cast<double>(loss.supervised_positions);
    }
    if (cfg.max_grad_norm > 0.0) {
      double sq = 0.0;
      for (double g : loss.gradient) sq += g * g;
      const double norm = scale * std::sqrt(sq);
      if (norm > cfg.max_grad_norm) scale *= cfg.max_grad_norm / norm;
    }
    apply_update(params, loss.gradient, cfg.learning_rate * scale, cfg.freeze);
    loss_sum += loss.total;
    if (hooks.on_step) {
      hooks.on_step({first_step + stats.steps, epoch, id, loss.lm_term, loss.reg_term, loss.total,
                     loss.active_hinges});
    }
    ++stats.steps;
  }
  stats.mean_loss = stats.steps ? loss_sum / static_cast<double>(stats.steps) : 0.0;
  return stats;
}

ModelParams pretrain(const Corpus& corpus, const TrainConfig& cfg, std::size_t epochs) {
  TrainConfig base = cfg;
  base.loss = LossConfig{};
  base.freeze = FreezeMask::none();
  base.validate();
  ModelParams params = init_model(base.model);
  for (std::size_t epoch = 1; epoch <= epochs; ++epoch) train_epoch(params, corpus, base, epoch);
  return params;
}

std::vector<ExtractionPair> build_pairs(const Corpus& corpus, const TrainConfig& cfg,
                                        std::map<std::size_t, PairSetStats>* stats) {
  std::vector<ExtractionPair> all;
  for (std::size_t k : cfg.k_values) {
    PairSample sampled = sample_pairs(corpus, k, cfg.suffix_length, cfg.pair_seed);
    CollisionFilterResult filtered = filter_collisions(std::move(sampled.pairs));
    if (stats) {
      (*stats)[k] = {filtered.pairs.size(), sampled.skipped_short, filtered.dropped};
    }
    all.insert(all.end(), std::make_move_iterator(filtered.pairs.begin()),
               std::make_move_iterator(filtered.pairs.end()));
  }
  return all;
}

FitResult fit(const Corpus& train, const Corpus& val, const TrainConfig& cfg,
              const ModelParams* initial, const TrainHooks& hooks) {
  cfg.validate();
  if (train.empty()) throw std::invalid_argument("training corpus is empty");
  if (val.empty()) throw std::domain_error("validation corpus is empty");
  if (initial && initial->config().vocab_size != cfg.model.vocab_size) {
    throw std::invalid_argument("initial model vocabulary does not match the config");
  }

  ModelParams params = initial ? *initial : init_model(cfg.model);
  FitResult result{RunReport{}, params, params};
  RunReport& report = result.report;
  report.config_echo = format_train_config(cfg);
  report.train_samples = train.size();
  report.train_source_records = train.source_records;

  const auto pairs = build_pairs(train, cfg, &report.pair_stats);
  if (pairs.empty()) throw std::domain_error("no extractable pairs: every sample is too short");
  report.histories.reserve(pairs.size());
  for (const auto& pair : pairs) {
    report.histories.push_back({pair.sample_id, pair.k(), {}, {}});
  }

  std::optional<ReferenceCache> reference;
  if (cfg.loss.mode == LossMode::kNGramReg) reference.emplace(ReferenceSnapshot(params));

  std::size_t step = 0;
  try {
    for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
      const auto start = std::chrono::steady_clock::now();
      const EpochTrainStats stats =
          train_epoch(params, train, cfg, epoch, reference ? &*reference : nullptr, hooks, step);
      step += stats.steps;
      report.skipped_short_steps += stats.skipped_short;
      report.fully_dropped_steps += stats.fully_dropped;

      Evaluation eval = evaluate(params, val, pairs, cfg);
      eval.metrics.epoch = epoch;
      eval.metrics.train_loss = stats.mean_loss;
      for (std::size_t i = 0; i < pairs.size(); ++i) {
        report.histories[i].scores.push_back(eval.pair_scores[i].partial);
        report.histories[i].verbatim.push_back(eval.pair_scores[i].verbatim);
      }
      report.epochs.push_back(eval.metrics);
      report.epoch_seconds.push_back(
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
      if (hooks.on_epoch) hooks.on_epoch(eval.metrics);

      if (select_epoch(report.epochs, cfg.stop) == epoch) result.selected_params = params;
      if (cfg.stop.variant == StopVariant::kNGramThreshold && cfg.stop.halt &&
          eval.metrics.ngram_mem_percent > cfg.stop.threshold) {
        report.halted_early = epoch < cfg.max_epochs;
        break;
      }
    }
  } catch (...) {
    if (hooks.on_abort) hooks.on_abort(report);
    throw;
  }

  report.selected.best_val = select_epoch(report.epochs, {StopVariant::kBestVal});
  report.selected.best_acc = select_epoch(report.epochs, {StopVariant::kBestAcc});
  report.selected.ngram_threshold =
      select_epoch(report.epochs, {StopVariant::kNGramThreshold, cfg.stop.threshold});
  report.selected_epoch = select_epoch(report.epochs, cfg.stop);
  result.final_params = std::move(params);
  return result;
}

}  // namespace memaudit
