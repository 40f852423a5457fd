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

#include "memaudit/corpus.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <stdexcept>

#include "json.hpp"
#include "memaudit/errors.hpp"
#include "memaudit/random.hpp"

namespace memaudit {

using nlohmann::json;

const char* split_name(Split split) {
  return split == Split::kTrain ? "train" : "validation";
}

Corpus load_corpus(const std::filesystem::path& path, Split split, const Tokenizer& tokenizer,
                   std::size_t max_samples) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open corpus file: " + path.string());
  return load_corpus(in, path.stem().string(), split, tokenizer, max_samples);
}

Corpus load_corpus(std::istream& in, std::string name, Split split, const Tokenizer& tokenizer,
                   std::size_t max_samples) {
  Corpus corpus;
  corpus.name = std::move(name);
  corpus.split = split;

  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;

    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError(line_no, std::string("invalid JSON: ") + e.what());
    }
    if (!record.is_object()) throw ParseError(line_no, "record is not a JSON object");
    const auto text = record.find("text");
    if (text == record.end() || !text->is_string()) {
      throw ParseError(line_no, "missing string field \"text\"");
    }
    std::string id;
    if (const auto it = record.find("id"); it != record.end()) {
      if (!it->is_string()) throw ParseError(line_no, "field \"id\" must be a string");
      id = it->get<std::string>();
    }

    ++corpus.source_records;
    if (corpus.samples.size() >= max_samples) continue;
    try {
      corpus.samples.push_back(tokenizer.encode(text->get_ref<const std::string&>()));
    } catch (const std::invalid_argument& e) {
      throw ParseError(line_no, e.what());
    }
    corpus.ids.push_back(std::move(id));
  }
  if (in.bad()) throw DataError("read error in corpus " + corpus.name);
  return corpus;
}

Corpus make_corpus(std::string name, Split split, const std::vector<std::string>& texts,
                   const Tokenizer& tokenizer, std::size_t max_samples) {
  Corpus corpus;
  corpus.name = std::move(name);
  corpus.split = split;
  corpus.source_records = texts.size();
  for (const auto& text : texts) {
    if (corpus.samples.size() >= max_samples) break;
    corpus.samples.push_back(tokenizer.encode(text));
    corpus.ids.emplace_back();
  }
  return corpus;
}

void write_corpus_jsonl(std::ostream& out, const std::vector<std::string>& texts) {
  for (const auto& text : texts) out << json{{"text", text}}.dump() << '\n';
}

PairSample sample_pairs(const Corpus& corpus, std::size_t k, std::size_t suffix_length,
                        std::uint64_t seed) {
  if (k == 0 || suffix_length == 0) {
    throw std::invalid_argument("prefix and suffix lengths must be >= 1");
  }
  const std::size_t window = k + suffix_length;
  const std::uint64_t stream = hash_combine(hash_combine(seed, k), suffix_length);

  PairSample result;
  for (std::size_t id = 0; id < corpus.samples.size(); ++id) {
    const TokenSeq& sample = corpus.samples[id];
    if (sample.size() < window) {
      ++result.skipped_short;
      continue;
    }
    Rng rng(hash_combine(stream, id));
    const std::size_t offset = rng.below(sample.size() - window + 1);
    ExtractionPair pair;
    pair.sample_id = id;
    pair.offset = offset;
    pair.prefix.assign(sample.begin() + offset, sample.begin() + offset + k);
    pair.suffix.assign(sample.begin() + offset + k, sample.begin() + offset + window);
    result.pairs.push_back(std::move(pair));
  }
  return result;
}

CollisionFilterResult filter_collisions(std::vector<ExtractionPair> pairs) {
  CollisionFilterResult result;
  std::set<TokenSeq> seen;
  for (auto& pair : pairs) {
    if (seen.insert(pair.prefix).second) {
      result.pairs.push_back(std::move(pair));
    } else {
      ++result.dropped;
    }
  }
  return result;
}

void write_pairs_jsonl(std::ostream& out, const std::vector<ExtractionPair>& pairs) {
  for (const auto& pair : pairs) {
    json record = {{"sample_id", pair.sample_id},
                   {"k", pair.k()},
                   {"prefix_tokens", pair.prefix},
                   {"suffix_tokens", pair.suffix}};
    out << record.dump() << '\n';
  }
}

}  // namespace memaudit
