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

#ifndef MEMAUDIT_TOKENIZER_HPP_
#define MEMAUDIT_TOKENIZER_HPP_

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace memaudit {

using Token = std::uint32_t;
using TokenSeq = std::vector<Token>;

// Reserved id used to left-pad contexts shorter than the model window.
inline constexpr Token kPadToken = 0;

class Tokenizer {
 public:
  virtual ~Tokenizer() = default;

  virtual std::size_t vocab_size() const = 0;
  virtual TokenSeq encode(std::string_view text) const = 0;
  virtual std::string decode(const TokenSeq& tokens) const = 0;

  // Stable textual identifier; `make_tokenizer(t.descriptor())` rebuilds `t`.
  virtual std::string descriptor() const = 0;
};

// One token per byte, vocabulary of 256. Total and lossless.
class ByteTokenizer final : public Tokenizer {
 public:
  std::size_t vocab_size() const override { return 256; }
  TokenSeq encode(std::string_view text) const override;
  std::string decode(const TokenSeq& tokens) const override;
  std::string descriptor() const override { return "byte"; }
};

// Remaps a fixed character alphabet onto ids 1..N, keeping id 0 as padding,
// so vocab_size() == alphabet.size() + 1. Characters outside the alphabet are
// rejected with std::invalid_argument.
class AlphabetTokenizer final : public Tokenizer {
 public:
  explicit AlphabetTokenizer(std::string alphabet);

  // a-z, A-Z, 0-9 and space: 63 symbols, 64 ids with padding.
  static AlphabetTokenizer Default();

  std::size_t vocab_size() const override { return alphabet_.size() + 1; }
  TokenSeq encode(std::string_view text) const override;
  std::string decode(const TokenSeq& tokens) const override;
  std::string descriptor() const override { return "alphabet:" + alphabet_; }

  const std::string& alphabet() const { return alphabet_; }

 private:
  std::string alphabet_;
  std::array<Token, 256> to_id_{};
};

// Accepts "byte", "alphabet" (the default alphabet) or "alphabet:<chars>";
// throws std::invalid_argument otherwise.
std::unique_ptr<Tokenizer> make_tokenizer(std::string_view descriptor);

}  // namespace memaudit

#endif  // MEMAUDIT_TOKENIZER_HPP_
