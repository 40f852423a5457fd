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

#include <gtest/gtest.h>

#include <cmath>

#include "memaudit/errors.hpp"
#include "memaudit/trainer.hpp"
#include "support/test_support.hpp"

namespace memaudit {
namespace {

using testing::corpus_of;
using testing::random_tokens;

// A tiny configuration that still exercises every code path quickly.
TrainConfig tiny_config() {
  TrainConfig cfg;
  cfg.model = {12, 3, 4, 8, 1};
  cfg.max_epochs = 3;
  cfg.k_values = {3, 4};
  cfg.suffix_length = 4;
  return cfg;
}

Corpus random_corpus(std::uint64_t seed, std::size_t n, std::size_t len, Split split = Split::kTrain) {
  Rng rng(seed);
  std::vector<TokenSeq> samples;
  for (std::size_t i = 0; i < n; ++i) samples.push_back(random_tokens(rng, len, 12, 1));
  return corpus_of(samples, split);
}

EpochMetrics metrics(std::size_t epoch, double ppl, double acc, double ngram) {
  EpochMetrics m;
  m.epoch = epoch;
  m.val_perplexity = ppl;
  m.eval_accuracy = acc;
  m.ngram_mem_percent = ngram;
  return m;
}

TEST(StopCriterion, NamesAndValidation) {
  for (StopVariant v : {StopVariant::kBestVal, StopVariant::kBestAcc, StopVariant::kNGramThreshold}) {
    EXPECT_EQ(parse_stop_variant(stop_variant_name(v)), v);
  }
  EXPECT_THROW(parse_stop_variant("best_loss"), std::invalid_argument);
  EXPECT_THROW((StopCriterion{StopVariant::kNGramThreshold, 101.0}.validate()), std::invalid_argument);
  EXPECT_THROW((StopCriterion{StopVariant::kNGramThreshold, -1.0}.validate()), std::invalid_argument);
  EXPECT_EQ(StopCriterion{}.threshold, 20.0);
}

TEST(TrainConfig, DefaultsAndValidation) {
  const TrainConfig d;
  EXPECT_EQ(d.max_epochs, 8u);
  EXPECT_EQ(d.k_values, (std::vector<std::size_t>{12, 16, 20}));
  EXPECT_EQ(d.suffix_length, 20u);
  EXPECT_EQ(d.ngram_sizes, kDefaultNGramSizes);
  EXPECT_NO_THROW(d.validate());
  TrainConfig bad = d;
  bad.max_epochs = 0;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = d;
  bad.k_values = {};
  EXPECT_THROW(bad.validate(), std::invalid_argument);
  bad = d;
  bad.learning_rate = -1;
  EXPECT_THROW(bad.validate(), std::invalid_argument);
}

TEST(TrainConfig, RunSeedSetsEverySeed) {
  TrainConfig a, b;
  a.set_run_seed(1);
  b.set_run_seed(2);
  EXPECT_NE(a.model.seed, b.model.seed);
  EXPECT_NE(a.shuffle_seed, b.shuffle_seed);
  EXPECT_NE(a.pair_seed, b.pair_seed);
  EXPECT_NE(a.goldfish_seed, b.goldfish_seed);
  TrainConfig c;
  c.set_run_seed(1);
  EXPECT_EQ(a, c);
}

TEST(SelectEpoch, WorkedExamples) {
  std::vector<EpochMetrics> h;
  const double ngram[] = {5, 12, 22, 40};
  for (std::size_t e = 0; e < 4; ++e) h.push_back(metrics(e + 1, 10.0 - e, 0.5, ngram[e]));
  EXPECT_EQ(select_epoch(h, {StopVariant::kNGramThreshold, 20.0}), 2u);
  EXPECT_EQ(select_epoch(h, {StopVariant::kNGramThreshold, 4.0}), 1u);  // fallback
  EXPECT_EQ(select_epoch(h, {StopVariant::kBestVal}), 4u);
  EXPECT_EQ(select_epoch(h, {StopVariant::kBestAcc}), 1u);  // ties go early
  EXPECT_THROW(select_epoch({}, {}), std::invalid_argument);
}

TEST(SelectEpoch, DecreasingPerplexityPicksLast) {
  std::vector<EpochMetrics> h;
  for (std::size_t e = 1; e <= 8; ++e) h.push_back(metrics(e, 20.0 / e, 0.1 * e, 0));
  EXPECT_EQ(select_epoch(h, {StopVariant::kBestVal}), 8u);
  EXPECT_EQ(select_epoch(h, {StopVariant::kBestAcc}), 8u);
}

TEST(SelectEpoch, ThresholdNeverPicksAnExceedingEpochExceptFallback) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<EpochMetrics> h;
    for (std::size_t e = 1; e <= 1 + rng.below(8); ++e) h.push_back(metrics(e, 1, 0, rng.uniform(0, 40)));
    const std::size_t s = select_epoch(h, {StopVariant::kNGramThreshold, 20.0});
    if (h[s - 1].ngram_mem_percent > 20.0) {
      ASSERT_EQ(s, 1u);
      for (const auto& m : h) ASSERT_GT(m.ngram_mem_percent, 20.0);
    }
  }
}

TEST(ValidationPerplexity, UniformModelEqualsVocab) {
  const Corpus val = random_corpus(3, 5, 9, Split::kValidation);
  EXPECT_NEAR(validation_perplexity(ModelParams(tiny_config().model), val), 12.0, 1e-9);
  EXPECT_THROW(validation_perplexity(ModelParams(tiny_config().model), corpus_of({{1}})), std::domain_error);
}

TEST(ValidationPerplexity, MatchesNllOracle) {
  const ModelParams p = init_model({12, 3, 4, 8, 9});
  const Corpus val = random_corpus(4, 6, 11, Split::kValidation);
  double nll = 0;
  std::size_t n = 0;
  for (const auto& s : val.samples) {
    for (std::size_t i = 1; i < s.size(); ++i) {
      nll -= ngram_log_prob(p, std::span(s).first(i), std::span(s).subspan(i, 1));
      ++n;
    }
  }
  const double want = std::exp(nll / n);
  EXPECT_NEAR(validation_perplexity(p, val) / want, 1.0, 1e-9);
}

TEST(FinalTokenAccuracy, CountsGreedyHits) {
  const ModelParams p = testing::cycle_model(6, 2);
  const Corpus val = corpus_of({{1, 2, 3}, {4, 5, 1}, {2, 3, 5}, {7}}, Split::kValidation);
  EXPECT_DOUBLE_EQ(final_token_accuracy(p, val), 2.0 / 3);
}

TEST(Evaluate, CycleModelMemorisesCycleCorpus) {
  const ModelParams p = testing::cycle_model(12, 3);
  std::vector<TokenSeq> samples;
  for (Token s = 1; s < 12; ++s) samples.push_back(testing::cycle_tokens(12, s, 14));
  const Corpus train = corpus_of(samples);
  TrainConfig cfg = tiny_config();
  cfg.model = p.config();
  const auto pairs = build_pairs(train, cfg);
  const Evaluation e = evaluate(p, train, pairs, cfg);
  EXPECT_DOUBLE_EQ(e.metrics.mem_percent.at(3), 100.0);
  EXPECT_DOUBLE_EQ(e.metrics.mem_percent.at(4), 100.0);
  EXPECT_DOUBLE_EQ(e.metrics.ngram_mem_percent, 100.0);
  EXPECT_DOUBLE_EQ(e.metrics.eval_accuracy, 1.0);
  EXPECT_THROW(evaluate(p, Corpus{}, pairs, cfg), std::domain_error);
  EXPECT_THROW(evaluate(p, train, {}, cfg), std::domain_error);
}

TEST(BuildPairs, StatsPerK) {
  const Corpus c = corpus_of({TokenSeq(7, 1), TokenSeq(8, 2), TokenSeq(8, 2), TokenSeq(3, 1)});
  TrainConfig cfg = tiny_config();
  std::map<std::size_t, PairSetStats> stats;
  const auto pairs = build_pairs(c, cfg, &stats);
  // k=3: three long-enough samples, the two identical ones collide.
  EXPECT_EQ(stats.at(3), (PairSetStats{2, 1, 1}));
  EXPECT_EQ(stats.at(4), (PairSetStats{1, 2, 1}));
  EXPECT_EQ(pairs.size(), 3u);
}

TEST(TrainEpoch, ZeroLearningRateLeavesParams) {
  TrainConfig cfg = tiny_config();
  cfg.learning_rate = 0.0;
  ModelParams p = init_model(cfg.model);
  const ModelParams before = p;
  const auto stats = train_epoch(p, random_corpus(5, 4, 10), cfg, 1);
  EXPECT_EQ(p, before);
  EXPECT_EQ(stats.steps, 4u);
}

TEST(TrainEpoch, Deterministic) {
  const TrainConfig cfg = tiny_config();
  const Corpus c = random_corpus(6, 8, 10);
  ModelParams a = init_model(cfg.model), b = init_model(cfg.model);
  std::vector<std::size_t> order_a, order_b;
  TrainHooks ha, hb;
  ha.on_step = [&](const LossTraceRow& r) { order_a.push_back(r.sample_id); };
  hb.on_step = [&](const LossTraceRow& r) { order_b.push_back(r.sample_id); };
  train_epoch(a, c, cfg, 1, nullptr, ha);
  train_epoch(b, c, cfg, 1, nullptr, hb);
  EXPECT_EQ(a, b);
  EXPECT_EQ(order_a, order_b);
  std::vector<std::size_t> sorted = order_a;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7}));
  // A different epoch reshuffles.
  std::vector<std::size_t> order_e2;
  ha.on_step = [&](const LossTraceRow& r) { order_e2.push_back(r.sample_id); };
  train_epoch(a, c, cfg, 2, nullptr, ha);
  EXPECT_NE(order_e2, order_a);
}

TEST(TrainEpoch, SingleSampleLossDecreases) {
  TrainConfig cfg;
  cfg.model = {64, 8, 16, 32, 4};
  cfg.learning_rate = 0.1;
  Rng rng(7);
  const Corpus c = corpus_of({random_tokens(rng, 30, 64, 1)});
  ModelParams p = init_model(cfg.model);
  double last = lm_loss(p, c.samples[0]).total;
  for (std::size_t e = 1; e <= 5; ++e) {
    train_epoch(p, c, cfg, e);
    const double now = lm_loss(p, c.samples[0]).total;
    EXPECT_LT(now, last) << "epoch " << e;
    last = now;
  }
}

TEST(TrainEpoch, GradientClippingBoundsTheStep) {
  TrainConfig cfg = tiny_config();
  cfg.learning_rate = 1.0;
  cfg.max_grad_norm = 0.01;
  ModelParams p = init_model(cfg.model);
  const ModelParams before = p;
  train_epoch(p, random_corpus(8, 1, 10), cfg, 1);
  double norm = 0;
  for (std::size_t i = 0; i < p.size(); ++i) norm += std::pow(p.values()[i] - before.values()[i], 2);
  EXPECT_LE(std::sqrt(norm), 0.01 + 1e-12);
}

TEST(TrainEpoch, NonFiniteLossAborts) {
  TrainConfig cfg = tiny_config();
  ModelParams p = init_model(cfg.model);
  p.values()[p.size() - 1] = std::numeric_limits<double>::infinity();
  try {
    train_epoch(p, random_corpus(9, 2, 6), cfg, 3);
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 3"), std::string::npos) << e.what();
  }
}

TEST(Pretrain, DeterministicAndMovesAwayFromInit) {
  const TrainConfig cfg = tiny_config();
  const Corpus c = random_corpus(10, 5, 12);
  const ModelParams a = pretrain(c, cfg, 2);
  EXPECT_EQ(a, pretrain(c, cfg, 2));
  EXPECT_NE(a, init_model(cfg.model));
}

TEST(Fit, SingleEpochReport) {
  TrainConfig cfg = tiny_config();
  cfg.max_epochs = 1;
  const FitResult r = fit(random_corpus(11, 6, 12), random_corpus(12, 3, 12, Split::kValidation), cfg);
  ASSERT_EQ(r.report.epochs.size(), 1u);
  EXPECT_EQ(r.report.selected_epoch, 1u);
  EXPECT_EQ(r.report.selected, (SelectedEpochs{1, 1, 1}));
  EXPECT_EQ(r.report.histories.size(), r.report.pair_stats.at(3).pairs + r.report.pair_stats.at(4).pairs);
  for (const auto& h : r.report.histories) EXPECT_EQ(h.epochs(), 1u);
  EXPECT_EQ(r.selected_params, r.final_params);
  EXPECT_EQ(r.report.config_echo.empty(), false);
}

TEST(Fit, ZeroThresholdHaltsAfterFirstEpoch) {
  // The cycle model already reproduces the cycle corpus, so the epoch-1 score is high.
  const ModelParams start = testing::cycle_model(12, 3);
  std::vector<TokenSeq> samples;
  for (Token s = 1; s < 12; ++s) samples.push_back(testing::cycle_tokens(12, s, 14));
  TrainConfig cfg = tiny_config();
  cfg.model = start.config();
  cfg.stop = {StopVariant::kNGramThreshold, 0.0};
  const FitResult r = fit(corpus_of(samples), corpus_of(samples, Split::kValidation), cfg, &start);
  EXPECT_EQ(r.report.epochs.size(), 1u);
  EXPECT_TRUE(r.report.halted_early);
  EXPECT_EQ(r.report.selected_epoch, 1u);
}

TEST(Fit, IdenticalInputsGiveIdenticalReports) {
  TrainConfig cfg = tiny_config();
  cfg.loss.mode = LossMode::kNGramReg;
  cfg.loss.tau = 0.0;
  const Corpus train = random_corpus(13, 6, 12);
  const Corpus val = random_corpus(14, 3, 12, Split::kValidation);
  const FitResult a = fit(train, val, cfg);
  const FitResult b = fit(train, val, cfg);
  EXPECT_EQ(a.report, b.report);
  EXPECT_EQ(a.final_params, b.final_params);
  cfg.set_run_seed(99);
  EXPECT_NE(fit(train, val, cfg).final_params, a.final_params);
}

TEST(Fit, FrozenBlocksStayBitIdentical) {
  TrainConfig cfg = tiny_config();
  cfg.freeze.freeze(Block::kEmbedding);
  cfg.freeze.freeze(Block::kHidden);
  const ModelParams start = init_model(cfg.model);
  const FitResult r = fit(random_corpus(15, 6, 12), random_corpus(16, 3, 12, Split::kValidation), cfg, &start);
  EXPECT_TRUE(std::ranges::equal(r.final_params.block(Block::kEmbedding), start.block(Block::kEmbedding)));
  EXPECT_TRUE(std::ranges::equal(r.final_params.block(Block::kHidden), start.block(Block::kHidden)));
  EXPECT_FALSE(std::ranges::equal(r.final_params.block(Block::kOutput), start.block(Block::kOutput)));
}

TEST(Fit, HooksSeeEveryStepAndEpoch) {
  const TrainConfig cfg = tiny_config();
  std::size_t steps = 0, epochs = 0;
  TrainHooks hooks;
  hooks.on_step = [&](const LossTraceRow& r) { EXPECT_EQ(r.step, steps++); };
  hooks.on_epoch = [&](const EpochMetrics& m) { EXPECT_EQ(m.epoch, ++epochs); };
  fit(random_corpus(17, 5, 12), random_corpus(18, 2, 12, Split::kValidation), cfg, nullptr, hooks);
  EXPECT_EQ(steps, 15u);
  EXPECT_EQ(epochs, 3u);
}

TEST(Fit, AbortFlushesPartialReport) {
  const TrainConfig cfg = tiny_config();
  ModelParams start = init_model(cfg.model);
  start.values()[start.size() - 1] = std::numeric_limits<double>::quiet_NaN();
  bool flushed = false;
  TrainHooks hooks;
  hooks.on_abort = [&](const RunReport& r) {
    flushed = true;
    EXPECT_TRUE(r.epochs.empty());
    EXPECT_FALSE(r.config_echo.empty());
  };
  EXPECT_THROW(fit(random_corpus(19, 4, 12), random_corpus(20, 2, 12, Split::kValidation), cfg, &start, hooks),
               NumericError);
  EXPECT_TRUE(flushed);
}

TEST(Fit, RejectsUnusableInputs) {
  const TrainConfig cfg = tiny_config();
  const Corpus val = random_corpus(21, 2, 12, Split::kValidation);
  EXPECT_THROW(fit(Corpus{}, val, cfg), std::invalid_argument);
  EXPECT_THROW(fit(corpus_of({{1, 2}}), val, cfg), std::domain_error);
  EXPECT_THROW(fit(random_corpus(22, 2, 12), Corpus{}, cfg), std::domain_error);
}

}  // namespace
}  // namespace memaudit
