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

#ifndef MEMAUDIT_CORPUS_HPP_
#define MEMAUDIT_CORPUS_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "memaudit/tokenizer.hpp"

namespace memaudit {

inline constexpr std::size_t kDefaultMaxSamples = 5000;

enum class Split { kTrain, kValidation };

const char* split_name(Split split);

// Immutable after load. Sample ids are indices into `samples`.
struct Corpus {
  std::string name;
  Split split = Split::kTrain;
  std::vector<TokenSeq> samples;
  // Optional "id" field per sample; empty when the line had none.
  std::vector<std::string> ids;
  // Number of records in the source before truncation to max_samples.
  std::size_t source_records = 0;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  bool truncated() const { return source_records > samples.size(); }
};

// Reads UTF-8 JSONL, one object per line with a required string field "text".
// Blank lines are ignored. Throws DataError when the file cannot be opened and
// ParseError (with the 1-based line number) for malformed records.
Corpus load_corpus(const std::filesystem::path& path, Split split, const Tokenizer& tokenizer,
                   std::size_t max_samples = kDefaultMaxSamples);
Corpus load_corpus(std::istream& in, std::string name, Split split, const Tokenizer& tokenizer,
                   std::size_t max_samples = kDefaultMaxSamples);

Corpus make_corpus(std::string name, Split split, const std::vector<std::string>& texts,
                   const Tokenizer& tokenizer, std::size_t max_samples = kDefaultMaxSamples);

void write_corpus_jsonl(std::ostream& out, const std::vector<std::string>& texts);

// A k-token prefix immediately followed by an L-token suffix, both taken from
// samples[sample_id] starting at `offset`.
struct ExtractionPair {
  std::size_t sample_id = 0;
  std::size_t offset = 0;
  TokenSeq prefix;
  TokenSeq suffix;

  std::size_t k() const { return prefix.size(); }
  std::size_t suffix_length() const { return suffix.size(); }

  bool operator==(const ExtractionPair&) const = default;
};

struct PairSample {
  std::vector<ExtractionPair> pairs;
  std::size_t skipped_short = 0;
};

// One pair per sample of length >= k + L at a seeded uniform offset, ordered by
// sample id. Shorter samples are skipped and counted. Pure in all arguments.
PairSample sample_pairs(const Corpus& corpus, std::size_t k, std::size_t suffix_length,
                        std::uint64_t seed);

struct CollisionFilterResult {
  std::vector<ExtractionPair> pairs;
  std::size_t dropped = 0;
};

// Keeps the first pair for every distinct prefix.
CollisionFilterResult filter_collisions(std::vector<ExtractionPair> pairs);

// Debug dump: {"sample_id", "k", "prefix_tokens", "suffix_tokens"} per line.
void write_pairs_jsonl(std::ostream& out, const std::vector<ExtractionPair>& pairs);

}  // namespace memaudit

#endif  // MEMAUDIT_CORPUS_HPP_
