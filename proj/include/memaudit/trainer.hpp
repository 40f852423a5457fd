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

#ifndef MEMAUDIT_TRAINER_HPP_
#define MEMAUDIT_TRAINER_HPP_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "memaudit/corpus.hpp"
#include "memaudit/losses.hpp"
#include "memaudit/metrics.hpp"
#include "memaudit/model.hpp"

namespace memaudit {

enum class StopVariant { kBestVal, kBestAcc, kNGramThreshold };

const char* stop_variant_name(StopVariant variant);
StopVariant parse_stop_variant(std::string_view name);

struct StopCriterion {
  StopVariant variant = StopVariant::kBestVal;
  // Partial-memorisation score in [0, 100]; used by kNGramThreshold.
  double threshold = 20.0;
  // With kNGramThreshold, stop training after the first epoch above threshold.
  bool halt = true;

  void validate() const;
  bool operator==(const StopCriterion&) const = default;
};

// How a per-sample loss gradient becomes a step: as summed, or divided by
// the number of supervised positions.
enum class StepReduction { kSum, kMean };

const char* step_reduction_name(StepReduction reduction);
StepReduction parse_step_reduction(std::string_view name);

struct TrainConfig {
  ModelConfig model;
  std::size_t max_epochs = 8;
  double learning_rate = 0.1;
  StepReduction reduction = StepReduction::kSum;
  // Global L2 cap on each step's (reduced) gradient; 0 disables clipping.
  double max_grad_norm = 1.0;
  LossConfig loss;
  FreezeMask freeze;
  std::vector<std::size_t> k_values = {12, 16, 20};
  std::size_t suffix_length = 20;
  NGramSizes ngram_sizes = kDefaultNGramSizes;
  MatchOptions match;
  std::size_t slack = 0;
  StopCriterion stop;
  std::uint64_t shuffle_seed = 1;
  std::uint64_t pair_seed = 1;
  std::uint64_t goldfish_seed = 1;

  void validate() const;
  // Sets the model, shuffle, pair and goldfish seeds from one run seed.
  void set_run_seed(std::uint64_t seed);

  bool operator==(const TrainConfig&) const = default;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  std::map<std::size_t, double> mem_percent;       // per k
  std::map<std::size_t, double> ngram_mem_by_k;    // per k
  double ngram_mem_percent = 0.0;                  // over all pairs
  double val_perplexity = 0.0;
  // Proxy task metric: held-out final-token greedy accuracy.
  double eval_accuracy = 0.0;
  double train_loss = 0.0;  // mean total loss per step during the epoch

  // Mean of mem_percent over the k values.
  double mean_mem_percent() const;

  bool operator==(const EpochMetrics&) const = default;
};

// exp(mean per-token NLL) over positions 2..T of every sample.
// Throws std::domain_error when the corpus has nothing to predict.
double validation_perplexity(const ModelParams& params, const Corpus& corpus);

// Fraction of samples (length >= 2) whose greedy next token after all but the
// last token equals the last token. Throws std::domain_error when none qualify.
double final_token_accuracy(const ModelParams& params, const Corpus& corpus);

struct Evaluation {
  EpochMetrics metrics;
  std::vector<PairScore> pair_scores;  // aligned with the pairs argument
};

// Throws std::domain_error on an empty validation corpus or pair set.
Evaluation evaluate(const ModelParams& params, const Corpus& val_corpus,
                    std::span<const ExtractionPair> pairs, const TrainConfig& cfg);

// 1-based epoch chosen by the criterion; deterministic tie-breaks toward the
// earliest epoch. Throws std::invalid_argument on empty history.
std::size_t select_epoch(std::span<const EpochMetrics> history, const StopCriterion& criterion);

struct LossTraceRow {
  std::size_t step = 0;
  std::size_t epoch = 0;
  std::size_t sample_id = 0;
  double lm_term = 0.0;
  double reg_term = 0.0;
  double total = 0.0;
  std::size_t active_hinges = 0;
};

struct RunReport;

struct TrainHooks {
  std::function<void(const LossTraceRow&)> on_step;
  std::function<void(const EpochMetrics&)> on_epoch;
  // Receives the epochs completed so far when fit aborts with an exception.
  std::function<void(const RunReport&)> on_abort;
};

struct EpochTrainStats {
  std::size_t steps = 0;
  double mean_loss = 0.0;
  std::size_t skipped_short = 0;  // samples with nothing to predict
  std::size_t fully_dropped = 0;  // goldfish samples with every position dropped
};

// One SGD step per sample in a seeded shuffle of the corpus. `epoch` is
// 1-based and selects the shuffle. Throws NumericError on a non-finite loss.
EpochTrainStats train_epoch(ModelParams& params, const Corpus& corpus, const TrainConfig& cfg,
                            std::size_t epoch, ReferenceCache* reference = nullptr,
                            const TrainHooks& hooks = {}, std::size_t first_step = 0);

// Base model for fine-tuning: init_model(cfg.model) trained with plain loss
// and no freezing for `epochs` passes over `corpus`.
ModelParams pretrain(const Corpus& corpus, const TrainConfig& cfg, std::size_t epochs);

struct PairSetStats {
  std::size_t pairs = 0;
  std::size_t skipped_short = 0;
  std::size_t collisions = 0;

  bool operator==(const PairSetStats&) const = default;
};

struct SelectedEpochs {
  std::size_t best_val = 0;
  std::size_t best_acc = 0;
  std::size_t ngram_threshold = 0;

  bool operator==(const SelectedEpochs&) const = default;
};

struct RunReport {
  std::string config_echo;
  std::vector<EpochMetrics> epochs;
  std::vector<SampleScoreHistory> histories;
  std::map<std::size_t, PairSetStats> pair_stats;  // per k
  SelectedEpochs selected;
  // Epoch chosen by the configured criterion.
  std::size_t selected_epoch = 0;
  bool halted_early = false;
  std::size_t train_samples = 0;
  std::size_t train_source_records = 0;
  std::size_t skipped_short_steps = 0;
  std::size_t fully_dropped_steps = 0;
  // Wall-clock seconds per epoch. Not serialised with the report.
  std::vector<double> epoch_seconds;

  bool operator==(const RunReport& other) const;
};

struct FitResult {
  RunReport report;
  ModelParams final_params;
  ModelParams selected_params;
};

// Samples and collision-filters the extraction pairs for every k.
std::vector<ExtractionPair> build_pairs(const Corpus& corpus, const TrainConfig& cfg,
                                        std::map<std::size_t, PairSetStats>* stats = nullptr);

// Full fine-tuning run: train, evaluate after every epoch, select. Starts from
// `initial` when given, else from init_model(cfg.model).
FitResult fit(const Corpus& train, const Corpus& val, const TrainConfig& cfg,
              const ModelParams* initial = nullptr, const TrainHooks& hooks = {});

}  // namespace memaudit

#endif  // MEMAUDIT_TRAINER_HPP_
