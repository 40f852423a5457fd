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

#include "memaudit/tokenizer.hpp"

#include <stdexcept>

namespace memaudit {

TokenSeq ByteTokenizer::encode(std::string_view text) const {
  TokenSeq out;
  out.reserve(text.size());
  for (char c : text) out.push_back(static_cast<unsigned char>(c));
  return out;
}

std::string ByteTokenizer::decode(const TokenSeq& tokens) const {
  std::string out;
  out.reserve(tokens.size());
  for (Token t : tokens) {
    if (t >= 256) throw std::invalid_argument("byte token out of range: " + std::to_string(t));
    out.push_back(static_cast<char>(static_cast<unsigned char>(t)));
  }
  return out;
}

AlphabetTokenizer::AlphabetTokenizer(std::string alphabet) : alphabet_(std::move(alphabet)) {
  if (alphabet_.empty()) throw std::invalid_argument("alphabet must not be empty");
  for (std::size_t i = 0; i < alphabet_.size(); ++i) {
    const auto byte = static_cast<unsigned char>(alphabet_[i]);
    if (byte == 0) throw std::invalid_argument("alphabet may not contain NUL");
    if (to_id_[byte] != 0) {
      throw std::invalid_argument(std::string("duplicate alphabet character '") + alphabet_[i] + "'");
    }
    to_id_[byte] = static_cast<Token>(i + 1);
  }
}

AlphabetTokenizer AlphabetTokenizer::Default() {
  return AlphabetTokenizer("abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 ");
}

TokenSeq AlphabetTokenizer::encode(std::string_view text) const {
  TokenSeq out;
  out.reserve(text.size());
  for (char c : text) {
    const Token id = to_id_[static_cast<unsigned char>(c)];
    if (id == 0) {
      throw std::invalid_argument("character outside tokenizer alphabet: code " +
                                  std::to_string(static_cast<unsigned char>(c)));
    }
    out.push_back(id);
  }
  return out;
}

std::string AlphabetTokenizer::decode(const TokenSeq& tokens) const {
  std::string out;
  out.reserve(tokens.size());
  for (Token t : tokens) {
    if (t == kPadToken || t > alphabet_.size()) {
      throw std::invalid_argument("token not in alphabet: " + std::to_string(t));
    }
    out.push_back(alphabet_[t - 1]);
  }
  return out;
}

std::unique_ptr<Tokenizer> make_tokenizer(std::string_view descriptor) {
  if (descriptor == "byte") return std::make_unique<ByteTokenizer>();
  if (descriptor == "alphabet") return std::make_unique<AlphabetTokenizer>(AlphabetTokenizer::Default());
  constexpr std::string_view kAlphabet = "alphabet:";
  if (descriptor.substr(0, kAlphabet.size()) == kAlphabet) {
    return std::make_unique<AlphabetTokenizer>(std::string(descriptor.substr(kAlphabet.size())));
  }
  throw std::invalid_argument("unknown tokenizer: " + std::string(descriptor));
}

}  // namespace memaudit
