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

#include "memaudit/config.hpp"

#include <charconv>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "memaudit/errors.hpp"

namespace memaudit {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view what) {
  throw DataError("config key '" + std::string(key) + "': " + std::string(what) + " (got '" +
                  std::string(value) + "')");
}

const char* normalisation_name(MatchNormalisation n) {
  switch (n) {
    case MatchNormalisation::kTarget:
      return "target";
    case MatchNormalisation::kGenerated:
      return "generated";
    case MatchNormalisation::kUnion:
      return "union";
  }
  return "?";
}

MatchNormalisation parse_normalisation(std::string_view key, std::string_view value) {
  for (auto n : {MatchNormalisation::kTarget, MatchNormalisation::kGenerated,
                 MatchNormalisation::kUnion}) {
    if (value == normalisation_name(n)) return n;
  }
  bad_value(key, value, "expected target, generated or union");
}

std::string format_freeze(const FreezeMask& mask) {
  std::string out;
  for (Block b : kAllBlocks) {
    if (!mask.is_frozen(b)) continue;
    if (!out.empty()) out += ',';
    out += block_name(b);
  }
  return out.empty() ? "none" : out;
}

template <typename Fn>
auto wrap_invalid(std::string_view key, std::string_view value, Fn&& fn) {
  try {
    return fn();
  } catch (const std::invalid_argument& e) {
    bad_value(key, value, e.what());
  }
}

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::string_view text) {
  KeyValueConfig kv;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const auto end = text.find('\n', pos);
    const auto raw = text.substr(pos, end == std::string_view::npos ? text.size() - pos : end - pos);
    pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
    ++line_no;
    const auto line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected 'key = value'");
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw ParseError(line_no, "empty key");
    if (kv.entries_.count(key) != 0) {
      throw ParseError(line_no, "duplicate key '" + std::string(key) + "'");
    }
    kv.entries_.emplace(std::string(key), Entry{std::string(trim(line.substr(eq + 1))), line_no});
  }
  return kv;
}

bool KeyValueConfig::contains(std::string_view key) const { return entries_.count(key) != 0; }

std::optional<std::string> KeyValueConfig::take(std::string_view key) {
  const auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  std::string value = std::move(it->second.value);
  entries_.erase(it);
  return value;
}

void KeyValueConfig::reject_unknown() const {
  if (entries_.empty()) return;
  std::string msg = "unknown config key(s):";
  for (const auto& [key, entry] : entries_) {
    msg += " '" + key + "' (line " + std::to_string(entry.line) + ")";
  }
  throw DataError(msg);
}

std::uint64_t parse_u64(std::string_view key, std::string_view value) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || value.empty()) {
    bad_value(key, value, "expected a non-negative integer");
  }
  return out;
}

std::size_t parse_count(std::string_view key, std::string_view value) {
  return static_cast<std::size_t>(parse_u64(key, value));
}

double parse_real(std::string_view key, std::string_view value) {
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || ptr != value.data() + value.size() || value.empty()) {
    bad_value(key, value, "expected a real number");
  }
  return out;
}

bool parse_flag(std::string_view key, std::string_view value) {
  if (value == "true") return true;
  if (value == "false") return false;
  bad_value(key, value, "expected true or false");
}

std::vector<std::string> parse_name_list(std::string_view value) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= value.size()) {
    const auto comma = value.find(',', pos);
    const auto item =
        trim(value.substr(pos, comma == std::string_view::npos ? value.size() - pos : comma - pos));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

std::vector<std::size_t> parse_count_list(std::string_view key, std::string_view value) {
  std::vector<std::size_t> out;
  for (const auto& item : parse_name_list(value)) out.push_back(parse_count(key, item));
  if (out.empty()) bad_value(key, value, "expected a comma-separated list of integers");
  return out;
}

std::string format_real(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

std::string join_counts(const std::vector<std::size_t>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(values[i]);
  }
  return out;
}

std::string format_train_config(const TrainConfig& cfg) {
  std::ostringstream out;
  out << "vocab_size = " << cfg.model.vocab_size << '\n'
      << "context_window = " << cfg.model.context_window << '\n'
      << "embed_dim = " << cfg.model.embed_dim << '\n'
      << "hidden_dim = " << cfg.model.hidden_dim << '\n'
      << "model_seed = " << cfg.model.seed << '\n'
      << "shuffle_seed = " << cfg.shuffle_seed << '\n'
      << "pair_seed = " << cfg.pair_seed << '\n'
      << "goldfish_seed = " << cfg.goldfish_seed << '\n'
      << "max_epochs = " << cfg.max_epochs << '\n'
      << "learning_rate = " << format_real(cfg.learning_rate) << '\n'
      << "step_reduction = " << step_reduction_name(cfg.reduction) << '\n'
      << "max_grad_norm = " << format_real(cfg.max_grad_norm) << '\n'
      << "freeze = " << format_freeze(cfg.freeze) << '\n'
      << "loss_mode = " << loss_mode_name(cfg.loss.mode) << '\n'
      << "lambda = " << format_real(cfg.loss.lambda) << '\n'
      << "tau = " << format_real(cfg.loss.tau) << '\n'
      << "reg_ngrams = " << join_counts(cfg.loss.sizes) << '\n'
      << "goldfish_period = "
      << (cfg.loss.goldfish_period ? std::to_string(*cfg.loss.goldfish_period) : "inf") << '\n'
      << "k_values = " << join_counts(cfg.k_values) << '\n'
      << "suffix_len = " << cfg.suffix_length << '\n'
      << "ngrams = " << join_counts(cfg.ngram_sizes) << '\n'
      << "match_normalisation = " << normalisation_name(cfg.match.normalisation) << '\n'
      << "match_pooling = " << (cfg.match.pool_sizes ? "pooled" : "per_size") << '\n'
      << "slack = " << cfg.slack << '\n'
      << "criterion = " << stop_variant_name(cfg.stop.variant) << '\n'
      << "threshold = " << format_real(cfg.stop.threshold) << '\n'
      << "halt = " << (cfg.stop.halt ? "true" : "false") << '\n';
  return out.str();
}

void read_train_config(KeyValueConfig& kv, TrainConfig& cfg) {
  const auto count = [&kv](std::string_view key, std::size_t& field) {
    if (auto v = kv.take(key)) field = parse_count(key, *v);
  };
  const auto u64 = [&kv](std::string_view key, std::uint64_t& field) {
    if (auto v = kv.take(key)) field = parse_u64(key, *v);
  };
  const auto real = [&kv](std::string_view key, double& field) {
    if (auto v = kv.take(key)) field = parse_real(key, *v);
  };
  const auto counts = [&kv](std::string_view key, std::vector<std::size_t>& field) {
    if (auto v = kv.take(key)) field = parse_count_list(key, *v);
  };

  count("vocab_size", cfg.model.vocab_size);
  count("context_window", cfg.model.context_window);
  count("embed_dim", cfg.model.embed_dim);
  count("hidden_dim", cfg.model.hidden_dim);
  u64("model_seed", cfg.model.seed);
  u64("shuffle_seed", cfg.shuffle_seed);
  u64("pair_seed", cfg.pair_seed);
  u64("goldfish_seed", cfg.goldfish_seed);
  count("max_epochs", cfg.max_epochs);
  real("learning_rate", cfg.learning_rate);
  if (auto v = kv.take("step_reduction")) {
    cfg.reduction = wrap_invalid("step_reduction", *v, [&] { return parse_step_reduction(*v); });
  }
  real("max_grad_norm", cfg.max_grad_norm);
  if (auto v = kv.take("freeze")) {
    cfg.freeze = FreezeMask::none();
    if (*v != "none") {
      for (const auto& name : parse_name_list(*v)) {
        cfg.freeze.freeze(wrap_invalid("freeze", *v, [&] { return parse_block(name); }));
      }
    }
  }
  if (auto v = kv.take("loss_mode")) {
    cfg.loss.mode = wrap_invalid("loss_mode", *v, [&] { return parse_loss_mode(*v); });
  }
  real("lambda", cfg.loss.lambda);
  real("tau", cfg.loss.tau);
  counts("reg_ngrams", cfg.loss.sizes);
  if (auto v = kv.take("goldfish_period")) {
    if (*v == "inf") {
      cfg.loss.goldfish_period.reset();
    } else {
      cfg.loss.goldfish_period = parse_u64("goldfish_period", *v);
    }
  }
  counts("k_values", cfg.k_values);
  count("suffix_len", cfg.suffix_length);
  counts("ngrams", cfg.ngram_sizes);
  if (auto v = kv.take("match_normalisation")) {
    cfg.match.normalisation = parse_normalisation("match_normalisation", *v);
  }
  if (auto v = kv.take("match_pooling")) {
    if (*v == "pooled") {
      cfg.match.pool_sizes = true;
    } else if (*v == "per_size") {
      cfg.match.pool_sizes = false;
    } else {
      bad_value("match_pooling", *v, "expected pooled or per_size");
    }
  }
  count("slack", cfg.slack);
  if (auto v = kv.take("criterion")) {
    cfg.stop.variant = wrap_invalid("criterion", *v, [&] { return parse_stop_variant(*v); });
  }
  real("threshold", cfg.stop.threshold);
  if (auto v = kv.take("halt")) cfg.stop.halt = parse_flag("halt", *v);

  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("invalid training config: ") + e.what());
  }
}

TrainConfig parse_train_config(std::string_view text) {
  auto kv = KeyValueConfig::parse(text);
  TrainConfig cfg;
  read_train_config(kv, cfg);
  kv.reject_unknown();
  return cfg;
}

}  // namespace memaudit
