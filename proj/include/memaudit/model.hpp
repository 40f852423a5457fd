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

#ifndef MEMAUDIT_MODEL_HPP_
#define MEMAUDIT_MODEL_HPP_

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "memaudit/tokenizer.hpp"

namespace memaudit {

struct ModelConfig {
  std::size_t vocab_size = 64;
  std::size_t context_window = 8;
  std::size_t embed_dim = 16;
  std::size_t hidden_dim = 32;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument on vocab < 2 or any zero dimension.
  void validate() const;
  std::size_t input_dim() const { return context_window * embed_dim; }

  bool operator==(const ModelConfig&) const = default;
};

// Trainable parameter groups, in storage order. The freeze mask works at this
// granularity; "hidden" and "output" each include their bias.
enum class Block : std::size_t { kEmbedding = 0, kHidden = 1, kOutput = 2 };
inline constexpr std::array<Block, 3> kAllBlocks = {Block::kEmbedding, Block::kHidden,
                                                    Block::kOutput};
const char* block_name(Block block);
Block parse_block(std::string_view name);

using Gradient = std::vector<double>;

// Flat parameter storage for the fixed-window LM:
//   embedding      vocab x embed          (row per token)
//   hidden_weight  hidden x (window*embed)
//   hidden_bias    hidden
//   output_weight  vocab x hidden
//   output_bias    vocab
class ModelParams {
 public:
  // Zero-initialised parameters of the right shape.
  explicit ModelParams(const ModelConfig& config);

  const ModelConfig& config() const { return config_; }
  std::size_t size() const { return values_.size(); }
  static std::size_t count_for(const ModelConfig& config);

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  std::span<double> block(Block b);
  std::span<const double> block(Block b) const;

  std::span<const double> embedding() const { return segment(0, embedding_size()); }
  std::span<const double> hidden_weight() const {
    return segment(embedding_size(), hidden_weight_size());
  }
  std::span<const double> hidden_bias() const {
    return segment(embedding_size() + hidden_weight_size(), config_.hidden_dim);
  }
  std::span<const double> output_weight() const {
    return segment(output_offset(), output_weight_size());
  }
  std::span<const double> output_bias() const {
    return segment(output_offset() + output_weight_size(), config_.vocab_size);
  }

  std::size_t embedding_size() const { return config_.vocab_size * config_.embed_dim; }
  std::size_t hidden_weight_size() const { return config_.hidden_dim * config_.input_dim(); }
  std::size_t output_weight_size() const { return config_.vocab_size * config_.hidden_dim; }
  std::size_t output_offset() const {
    return embedding_size() + hidden_weight_size() + config_.hidden_dim;
  }

  bool all_finite() const;

  bool operator==(const ModelParams&) const = default;

 private:
  std::span<const double> segment(std::size_t offset, std::size_t count) const {
    return std::span<const double>(values_).subspan(offset, count);
  }

  ModelConfig config_;
  std::vector<double> values_;
};

// Draws every parameter i.i.d. uniform on [-0.05, 0.05] from config.seed.
ModelParams init_model(const ModelConfig& config);

struct FreezeMask {
  std::array<bool, 3> frozen{false, false, false};

  static FreezeMask none() { return {}; }
  static FreezeMask all() { return {{true, true, true}}; }

  bool is_frozen(Block b) const { return frozen[static_cast<std::size_t>(b)]; }
  void freeze(Block b) { frozen[static_cast<std::size_t>(b)] = true; }

  bool operator==(const FreezeMask&) const = default;
};

// Plain gradient descent on the trainable blocks: p <- p - lr * g.
// Throws std::invalid_argument when the gradient does not match in size.
void apply_update(ModelParams& params, std::span<const double> gradient, double learning_rate,
                  const FreezeMask& mask);

// Causal LM interface used by the metrics. Contexts may be any length; the
// model decides how much of the tail it reads.
class LanguageModel {
 public:
  virtual ~LanguageModel() = default;

  virtual std::size_t vocab_size() const = 0;
  virtual void next_token_logits(std::span<const Token> context, std::span<double> logits) const = 0;

  std::vector<double> next_token_logits(std::span<const Token> context) const;
};

// Non-owning view of ModelParams as a LanguageModel. Contexts shorter than the
// window are left-padded with kPadToken; longer ones are cut to the last
// `context_window` tokens.
class WindowModel final : public LanguageModel {
 public:
  explicit WindowModel(const ModelParams& params) : params_(&params) {}

  std::size_t vocab_size() const override { return params_->config().vocab_size; }
  void next_token_logits(std::span<const Token> context, std::span<double> logits) const override;
  using LanguageModel::next_token_logits;

  const ModelParams& params() const { return *params_; }

 private:
  const ModelParams* params_;
};

std::vector<double> next_token_logits(const ModelParams& params, std::span<const Token> context);

// Numerically stable log-softmax / softmax.
std::vector<double> log_softmax(std::span<const double> logits);
std::vector<double> softmax(std::span<const double> logits);

// Appends `length` argmax tokens, feeding each back. Ties go to the lowest id.
TokenSeq greedy_decode(const LanguageModel& model, std::span<const Token> prefix, std::size_t length);
TokenSeq greedy_decode(const ModelParams& params, std::span<const Token> prefix, std::size_t length);

// sum_i log p(gram[i] | preceding ++ gram[0..i)). Throws on an empty gram.
double ngram_log_prob(const LanguageModel& model, std::span<const Token> preceding,
                      std::span<const Token> gram);
double ngram_log_prob(const ModelParams& params, std::span<const Token> preceding,
                      std::span<const Token> gram);

// Activations of every position of one sequence, kept for backprop.
// Position i predicts seq[i] from the (padded) window ending just before i.
class SequenceActivations {
 public:
  SequenceActivations(const ModelParams& params, std::span<const Token> sequence);

  std::size_t length() const { return targets_.size(); }
  // log p(seq[i] | seq[<i]) under the window model.
  double log_prob(std::size_t i) const { return log_probs_[i]; }
  std::span<const double> log_probs() const { return log_probs_; }

  // gradient += sum_i weights[i] * d(-log p(seq[i] | seq[<i])) / d(params).
  // Positions with zero weight are skipped.
  void backward(const ModelParams& params, std::span<const double> weights,
                std::span<double> gradient) const;

 private:
  std::size_t window_ = 0;
  std::size_t input_dim_ = 0;
  std::size_t hidden_dim_ = 0;
  std::size_t vocab_size_ = 0;
  std::size_t embed_dim_ = 0;
  std::vector<Token> contexts_;   // length x window
  std::vector<Token> targets_;
  std::vector<double> inputs_;    // length x input_dim
  std::vector<double> hidden_;    // length x hidden_dim (post-tanh)
  std::vector<double> probs_;     // length x vocab
  std::vector<double> log_probs_;
};

// Frozen deep copy of the parameters taken before fine-tuning.
class ReferenceSnapshot {
 public:
  explicit ReferenceSnapshot(const ModelParams& params)
      : params_(std::make_shared<const ModelParams>(params)) {}

  const ModelParams& params() const { return *params_; }

 private:
  std::shared_ptr<const ModelParams> params_;
};

// Binary checkpoint; layout documented in README.md.
struct Checkpoint {
  ModelParams params;
  std::string tokenizer;
};

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     std::string_view tokenizer_descriptor);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace memaudit

#endif  // MEMAUDIT_MODEL_HPP_
