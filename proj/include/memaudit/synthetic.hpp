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

#ifndef MEMAUDIT_SYNTHETIC_HPP_
#define MEMAUDIT_SYNTHETIC_HPP_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace memaudit {

// Desk-scale memorisation corpus: Zipf-distributed pseudo-word text over the
// default 63-symbol alphabet, with one fixed "secret" string planted in a
// subset of the training samples. Validation samples never contain it.
// Background text never repeats a word immediately, which keeps greedy
// decodes from collapsing into trivial loops.
enum class SecretStyle {
  kCharacters,  // uniform characters from secret_alphabet
  kWords,       // uniformly chosen lexicon words
  kTypos,       // lexicon words with one letter each replaced from secret_alphabet
};

struct SecretCorpusOptions {
  std::size_t train_samples = 200;
  std::size_t secret_samples = 50;
  std::size_t secret_length = 40;
  SecretStyle secret_style = SecretStyle::kCharacters;
  std::string secret_alphabet = "abcdefghijklmnopqrstuvwxyz";
  // Plant the secret at the start of its samples rather than at a random
  // offset inside the background text.
  bool secret_at_start = true;
  std::size_t validation_samples = 100;
  // Secret-free text from the same language, for building the base model.
  std::size_t pretrain_samples = 1000;
  std::size_t sample_length = 64;   // characters, approximate for background text
  std::size_t lexicon_size = 200;
  std::size_t min_word_length = 2;
  std::size_t max_word_length = 7;
  double zipf_exponent = 0.9;
  // Fraction of word-frequency ranks reshuffled between the pretraining text
  // and the fine-tuning domain (train + validation).
  double domain_shift = 0.5;
  std::uint64_t seed = 2024;
};

struct SecretCorpus {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> pretrain;
  std::string secret;
  std::vector<std::size_t> secret_ids;  // train indices carrying the secret
};

SecretCorpus make_secret_corpus(const SecretCorpusOptions& options = {});

}  // namespace memaudit

#endif  // MEMAUDIT_SYNTHETIC_HPP_
