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

#include "memaudit/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <utility>

#include "memaudit/errors.hpp"
#include "memaudit/random.hpp"

namespace memaudit {

namespace {

constexpr double kInitScale = 0.05;

// Fills `window` with the last `window.size()` tokens of `context`, left-padded.
void fill_window(std::span<const Token> context, std::span<Token> window) {
  const std::size_t w = window.size();
  const std::size_t take = std::min(w, context.size());
  std::fill(window.begin(), window.begin() + (w - take), kPadToken);
  std::copy(context.end() - take, context.end(), window.begin() + (w - take));
}

// Forward pass for one window; writes the input and hidden activations.
void forward_window(const ModelParams& params, std::span<const Token> window,
                    std::span<double> input, std::span<double> hidden,
                    std::span<double> logits) {
  const ModelConfig& cfg = params.config();
  const auto embedding = params.embedding();
  for (std::size_t j = 0; j < window.size(); ++j) {
    const Token t = window[j];
    if (t >= cfg.vocab_size) {
      throw std::invalid_argument("token id " + std::to_string(t) + " outside vocabulary");
    }
    std::copy_n(embedding.begin() + t * cfg.embed_dim, cfg.embed_dim,
                input.begin() + j * cfg.embed_dim);
  }
  const auto w1 = params.hidden_weight();
  const auto b1 = params.hidden_bias();
  const std::size_t in_dim = cfg.input_dim();
  for (std::size_t h = 0; h < cfg.hidden_dim; ++h) {
    const double* row = w1.data() + h * in_dim;
    double acc = b1[h];
    for (std::size_t i = 0; i < in_dim; ++i) acc += row[i] * input[i];
    hidden[h] = std::tanh(acc);
  }
  const auto w2 = params.output_weight();
  const auto b2 = params.output_bias();
  for (std::size_t v = 0; v < cfg.vocab_size; ++v) {
    const double* row = w2.data() + v * cfg.hidden_dim;
    double acc = b2[v];
    for (std::size_t h = 0; h < cfg.hidden_dim; ++h) acc += row[h] * hidden[h];
    logits[v] = acc;
  }
}

double log_sum_exp(std::span<const double> logits) {
  const double max = *std::max_element(logits.begin(), logits.end());
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - max);
  return max + std::log(sum);
}

void put_u32(std::ostream& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}
void put_u64(std::ostream& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.put(static_cast<char>((v >> (8 * i)) & 0xff));
}
std::uint64_t get_uint(std::istream& in, int bytes) {
  std::uint64_t v = 0;
  for (int i = 0; i < bytes; ++i) {
    const int c = in.get();
    if (c == std::char_traits<char>::eof()) throw DataError("checkpoint truncated");
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(c)) << (8 * i);
  }
  return v;
}

constexpr char kCheckpointMagic[8] = {'M', 'E', 'M', 'A', 'U', 'D', 'I', 'T'};
constexpr std::uint32_t kCheckpointVersion = 1;
constexpr std::uint64_t kMaxDimension = std::uint64_t{1} << 24;

}  // namespace

void ModelConfig::validate() const {
  if (vocab_size < 2) throw std::invalid_argument("vocab_size must be >= 2");
  if (context_window < 1) throw std::invalid_argument("context_window must be >= 1");
  if (embed_dim < 1) throw std::invalid_argument("embed_dim must be >= 1");
  if (hidden_dim < 1) throw std::invalid_argument("hidden_dim must be >= 1");
}

const char* block_name(Block block) {
  switch (block) {
    case Block::kEmbedding:
      return "embedding";
    case Block::kHidden:
      return "hidden";
    case Block::kOutput:
      return "output";
  }
  return "?";
}

Block parse_block(std::string_view name) {
  for (Block b : kAllBlocks) {
    if (name == block_name(b)) return b;
  }
  throw std::invalid_argument("unknown parameter block: " + std::string(name));
}

ModelParams::ModelParams(const ModelConfig& config) : config_(config) {
  config_.validate();
  values_.assign(count_for(config_), 0.0);
}

std::size_t ModelParams::count_for(const ModelConfig& c) {
  return c.vocab_size * c.embed_dim + c.hidden_dim * c.input_dim() + c.hidden_dim +
         c.vocab_size * c.hidden_dim + c.vocab_size;
}

std::span<double> ModelParams::block(Block b) {
  const auto view = std::as_const(*this).block(b);
  return {values_.data() + (view.data() - values_.data()), view.size()};
}

std::span<const double> ModelParams::block(Block b) const {
  switch (b) {
    case Block::kEmbedding:
      return segment(0, embedding_size());
    case Block::kHidden:
      return segment(embedding_size(), hidden_weight_size() + config_.hidden_dim);
    case Block::kOutput:
      return segment(output_offset(), output_weight_size() + config_.vocab_size);
  }
  throw std::invalid_argument("bad block");
}

bool ModelParams::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

ModelParams init_model(const ModelConfig& config) {
  ModelParams params(config);
  Rng rng(config.seed);
  for (double& v : params.values()) v = rng.uniform(-kInitScale, kInitScale);
  return params;
}

void apply_update(ModelParams& params, std::span<const double> gradient, double learning_rate,
                  const FreezeMask& mask) {
  if (gradient.size() != params.size()) {
    throw std::invalid_argument("gradient has " + std::to_string(gradient.size()) +
                                " entries, parameters have " + std::to_string(params.size()));
  }
  const double* base = params.values().data();
  for (Block b : kAllBlocks) {
    if (mask.is_frozen(b)) continue;
    auto values = params.block(b);
    const std::size_t offset = static_cast<std::size_t>(values.data() - base);
    for (std::size_t i = 0; i < values.size(); ++i) {
      values[i] -= learning_rate * gradient[offset + i];
    }
  }
}

std::vector<double> LanguageModel::next_token_logits(std::span<const Token> context) const {
  std::vector<double> logits(vocab_size());
  next_token_logits(context, logits);
  return logits;
}

void WindowModel::next_token_logits(std::span<const Token> context,
                                    std::span<double> logits) const {
  const ModelConfig& cfg = params_->config();
  std::vector<Token> window(cfg.context_window);
  std::vector<double> input(cfg.input_dim());
  std::vector<double> hidden(cfg.hidden_dim);
  fill_window(context, window);
  forward_window(*params_, window, input, hidden, logits);
}

std::vector<double> next_token_logits(const ModelParams& params, std::span<const Token> context) {
  return WindowModel(params).next_token_logits(context);
}

std::vector<double> log_softmax(std::span<const double> logits) {
  const double lse = log_sum_exp(logits);
  std::vector<double> out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

std::vector<double> softmax(std::span<const double> logits) {
  auto out = log_softmax(logits);
  for (double& v : out) v = std::exp(v);
  return out;
}

TokenSeq greedy_decode(const LanguageModel& model, std::span<const Token> prefix,
                       std::size_t length) {
  TokenSeq context(prefix.begin(), prefix.end());
  context.reserve(prefix.size() + length);
  std::vector<double> logits(model.vocab_size());
  for (std::size_t step = 0; step < length; ++step) {
    model.next_token_logits(context, logits);
    // max_element returns the first maximum, i.e. the lowest id on ties.
    const auto best = std::max_element(logits.begin(), logits.end());
    context.push_back(static_cast<Token>(best - logits.begin()));
  }
  return TokenSeq(context.begin() + static_cast<std::ptrdiff_t>(prefix.size()), context.end());
}

TokenSeq greedy_decode(const ModelParams& params, std::span<const Token> prefix,
                       std::size_t length) {
  return greedy_decode(WindowModel(params), prefix, length);
}

double ngram_log_prob(const LanguageModel& model, std::span<const Token> preceding,
                      std::span<const Token> gram) {
  if (gram.empty()) throw std::invalid_argument("n-gram must be non-empty");
  TokenSeq context(preceding.begin(), preceding.end());
  std::vector<double> logits(model.vocab_size());
  double total = 0.0;
  for (Token w : gram) {
    if (w >= model.vocab_size()) throw std::invalid_argument("n-gram token outside vocabulary");
    model.next_token_logits(context, logits);
    total += logits[w] - log_sum_exp(logits);
    context.push_back(w);
  }
  return total;
}

double ngram_log_prob(const ModelParams& params, std::span<const Token> preceding,
                      std::span<const Token> gram) {
  return ngram_log_prob(WindowModel(params), preceding, gram);
}

SequenceActivations::SequenceActivations(const ModelParams& params,
                                         std::span<const Token> sequence) {
  const ModelConfig& cfg = params.config();
  window_ = cfg.context_window;
  input_dim_ = cfg.input_dim();
  hidden_dim_ = cfg.hidden_dim;
  vocab_size_ = cfg.vocab_size;
  embed_dim_ = cfg.embed_dim;
  const std::size_t n = sequence.size();
  targets_.assign(sequence.begin(), sequence.end());
  contexts_.resize(n * window_);
  inputs_.resize(n * input_dim_);
  hidden_.resize(n * hidden_dim_);
  probs_.resize(n * vocab_size_);
  log_probs_.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    if (sequence[i] >= vocab_size_) {
      throw std::invalid_argument("token id " + std::to_string(sequence[i]) + " outside vocabulary");
    }
    std::span<Token> window(contexts_.data() + i * window_, window_);
    fill_window(sequence.first(i), window);
    std::span<double> logits(probs_.data() + i * vocab_size_, vocab_size_);
    forward_window(params, window, std::span(inputs_.data() + i * input_dim_, input_dim_),
                   std::span(hidden_.data() + i * hidden_dim_, hidden_dim_), logits);
    const double lse = log_sum_exp(logits);
    log_probs_[i] = logits[sequence[i]] - lse;
    for (double& z : logits) z = std::exp(z - lse);
  }
}

void SequenceActivations::backward(const ModelParams& params, std::span<const double> weights,
                                   std::span<double> gradient) const {
  if (weights.size() != length()) throw std::invalid_argument("one weight per position required");
  if (gradient.size() != params.size()) throw std::invalid_argument("gradient size mismatch");

  const std::size_t emb_off = 0;
  const std::size_t w1_off = params.embedding_size();
  const std::size_t b1_off = w1_off + params.hidden_weight_size();
  const std::size_t w2_off = params.output_offset();
  const std::size_t b2_off = w2_off + params.output_weight_size();
  const auto w1 = params.hidden_weight();
  const auto w2 = params.output_weight();

  std::vector<double> d_logits(vocab_size_);
  std::vector<double> d_pre(hidden_dim_);
  std::vector<double> d_input(input_dim_);

  for (std::size_t i = 0; i < length(); ++i) {
    const double weight = weights[i];
    if (weight == 0.0) continue;
    const double* probs = probs_.data() + i * vocab_size_;
    const double* hidden = hidden_.data() + i * hidden_dim_;
    const double* input = inputs_.data() + i * input_dim_;

    // d(-log p_target)/d logits = softmax - onehot.
    for (std::size_t v = 0; v < vocab_size_; ++v) d_logits[v] = weight * probs[v];
    d_logits[targets_[i]] -= weight;

    std::fill(d_pre.begin(), d_pre.end(), 0.0);
    for (std::size_t v = 0; v < vocab_size_; ++v) {
      const double g = d_logits[v];
      gradient[b2_off + v] += g;
      double* gw = gradient.data() + w2_off + v * hidden_dim_;
      const double* row = w2.data() + v * hidden_dim_;
      for (std::size_t h = 0; h < hidden_dim_; ++h) {
        gw[h] += g * hidden[h];
        d_pre[h] += g * row[h];
      }
    }
    for (std::size_t h = 0; h < hidden_dim_; ++h) d_pre[h] *= 1.0 - hidden[h] * hidden[h];

    std::fill(d_input.begin(), d_input.end(), 0.0);
    for (std::size_t h = 0; h < hidden_dim_; ++h) {
      const double g = d_pre[h];
      gradient[b1_off + h] += g;
      double* gw = gradient.data() + w1_off + h * input_dim_;
      const double* row = w1.data() + h * input_dim_;
      for (std::size_t j = 0; j < input_dim_; ++j) {
        gw[j] += g * input[j];
        d_input[j] += g * row[j];
      }
    }
    const Token* window = contexts_.data() + i * window_;
    for (std::size_t j = 0; j < window_; ++j) {
      double* ge = gradient.data() + emb_off + window[j] * embed_dim_;
      const double* src = d_input.data() + j * embed_dim_;
      for (std::size_t d = 0; d < embed_dim_; ++d) ge[d] += src[d];
    }
  }
}

void save_checkpoint(const std::filesystem::path& path, const ModelParams& params,
                     std::string_view tokenizer_descriptor) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write checkpoint: " + path.string());
  const ModelConfig& cfg = params.config();
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  put_u32(out, kCheckpointVersion);
  put_u64(out, cfg.vocab_size);
  put_u64(out, cfg.context_window);
  put_u64(out, cfg.embed_dim);
  put_u64(out, cfg.hidden_dim);
  put_u64(out, cfg.seed);
  put_u32(out, static_cast<std::uint32_t>(tokenizer_descriptor.size()));
  out.write(tokenizer_descriptor.data(), static_cast<std::streamsize>(tokenizer_descriptor.size()));
  put_u64(out, params.size());
  for (double v : params.values()) put_u64(out, std::bit_cast<std::uint64_t>(v));
  if (!out) throw DataError("failed writing checkpoint: " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open checkpoint: " + path.string());
  char magic[sizeof(kCheckpointMagic)];
  if (!in.read(magic, sizeof(magic)) || !std::equal(magic, magic + sizeof(magic), kCheckpointMagic)) {
    throw DataError("not a memaudit checkpoint: " + path.string());
  }
  const auto version = get_uint(in, 4);
  if (version != kCheckpointVersion) {
    throw DataError("unsupported checkpoint version " + std::to_string(version));
  }
  ModelConfig cfg;
  const auto read_dim = [&in]() {
    const auto v = get_uint(in, 8);
    if (v > kMaxDimension) throw DataError("checkpoint dimension out of range");
    return static_cast<std::size_t>(v);
  };
  cfg.vocab_size = read_dim();
  cfg.context_window = read_dim();
  cfg.embed_dim = read_dim();
  cfg.hidden_dim = read_dim();
  cfg.seed = get_uint(in, 8);
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("invalid checkpoint config: ") + e.what());
  }
  const auto name_len = get_uint(in, 4);
  if (name_len > 4096) throw DataError("checkpoint tokenizer descriptor too long");
  std::string tokenizer(name_len, '\0');
  if (!in.read(tokenizer.data(), static_cast<std::streamsize>(name_len))) {
    throw DataError("checkpoint truncated");
  }
  Checkpoint ckpt{ModelParams(cfg), std::move(tokenizer)};
  const auto count = get_uint(in, 8);
  if (count != ckpt.params.size()) {
    throw DataError("checkpoint parameter count " + std::to_string(count) +
                    " does not match its config");
  }
  for (double& v : ckpt.params.values()) v = std::bit_cast<double>(get_uint(in, 8));
  if (in.peek() != std::char_traits<char>::eof()) throw DataError("trailing bytes in checkpoint");
  if (!ckpt.params.all_finite()) throw DataError("checkpoint contains non-finite values");
  return ckpt;
}

}  // namespace memaudit
