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

#include "memaudit/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

#include "memaudit/random.hpp"

namespace memaudit {

namespace {

constexpr char kLower[] = "abcdefghijklmnopqrstuvwxyz";

class ZipfSampler {
 public:
  ZipfSampler(std::size_t n, double exponent) : cdf_(n) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      total += 1.0 / std::pow(static_cast<double>(i + 1), exponent);
      cdf_[i] = total;
    }
    for (double& c : cdf_) c /= total;
  }

  std::size_t draw(Rng& rng) const {
    const double u = rng.uniform();
    const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
  }

 private:
  std::vector<double> cdf_;
};

std::vector<std::string> make_lexicon(std::size_t size, std::size_t min_len, std::size_t max_len,
                                      Rng& rng) {
  std::set<std::string> seen;
  std::vector<std::string> words;
  while (words.size() < size) {
    const std::size_t len = min_len + rng.below(max_len - min_len + 1);
    std::string w;
    for (std::size_t i = 0; i < len; ++i) w.push_back(kLower[rng.below(26)]);
    if (seen.insert(w).second) words.push_back(std::move(w));
  }
  return words;
}

// Words in frequency-rank order.
using Ranking = std::vector<std::size_t>;

std::string background_text(std::size_t length, const std::vector<std::string>& lexicon,
                            const Ranking& ranking, const ZipfSampler& zipf, Rng& rng) {
  std::string text;
  std::size_t last = lexicon.size();
  while (text.size() < length) {
    std::size_t w = ranking[zipf.draw(rng)];
    while (w == last && lexicon.size() > 1) w = ranking[zipf.draw(rng)];
    last = w;
    if (!text.empty()) text.push_back(' ');
    text += lexicon[w];
  }
  return text;
}

// Reshuffles a `fraction` of the ranks among themselves.
Ranking shifted_ranking(const Ranking& base, double fraction, Rng& rng) {
  Ranking out = base;
  std::vector<std::size_t> picked;
  for (std::size_t i = 0; i < out.size(); ++i) {
    if (rng.uniform() < fraction) picked.push_back(i);
  }
  std::vector<std::size_t> words;
  for (std::size_t i : picked) words.push_back(out[i]);
  rng.shuffle(std::span<std::size_t>(words));
  for (std::size_t j = 0; j < picked.size(); ++j) out[picked[j]] = words[j];
  return out;
}

}  // namespace

SecretCorpus make_secret_corpus(const SecretCorpusOptions& options) {
  if (options.secret_samples > options.train_samples) {
    throw std::invalid_argument("more secret samples than training samples");
  }
  if (options.secret_alphabet.empty()) throw std::invalid_argument("secret alphabet must be non-empty");
  if (options.lexicon_size == 0) throw std::invalid_argument("lexicon must be non-empty");
  Rng rng(options.seed);
  if (options.min_word_length == 0 || options.min_word_length > options.max_word_length) {
    throw std::invalid_argument("word lengths must satisfy 1 <= min <= max");
  }
  const auto lexicon =
      make_lexicon(options.lexicon_size, options.min_word_length, options.max_word_length, rng);
  const ZipfSampler zipf(options.lexicon_size, options.zipf_exponent);
  Ranking general(options.lexicon_size);
  std::iota(general.begin(), general.end(), std::size_t{0});
  const Ranking domain = shifted_ranking(general, options.domain_shift, rng);

  SecretCorpus corpus;
  const auto secret_char = [&] { return options.secret_alphabet[rng.below(options.secret_alphabet.size())]; };
  if (options.secret_style == SecretStyle::kCharacters) {
    for (std::size_t i = 0; i < options.secret_length; ++i) corpus.secret.push_back(secret_char());
  } else {
    while (corpus.secret.size() < options.secret_length) {
      if (!corpus.secret.empty()) corpus.secret.push_back(' ');
      std::string word = lexicon[rng.below(lexicon.size())];
      if (options.secret_style == SecretStyle::kTypos) {
        const std::size_t at = rng.below(word.size());
        char c = secret_char();
        while (options.secret_alphabet.size() > 1 && c == word[at]) c = secret_char();
        word[at] = c;
      }
      corpus.secret += word;
    }
    corpus.secret.resize(options.secret_length);
  }

  std::vector<std::size_t> ids(options.train_samples);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  rng.shuffle(std::span<std::size_t>(ids));
  corpus.secret_ids.assign(ids.begin(), ids.begin() + options.secret_samples);
  std::sort(corpus.secret_ids.begin(), corpus.secret_ids.end());

  const std::size_t context = options.sample_length > options.secret_length
                                  ? options.sample_length - options.secret_length
                                  : 0;
  for (std::size_t i = 0; i < options.train_samples; ++i) {
    if (std::binary_search(corpus.secret_ids.begin(), corpus.secret_ids.end(), i)) {
      const std::size_t before = (context == 0 || options.secret_at_start) ? 0 : rng.below(context + 1);
      std::string text = before ? background_text(before, lexicon, domain, zipf, rng) + " " : "";
      text += corpus.secret;
      if (context > before) text += " " + background_text(context - before, lexicon, domain, zipf, rng);
      corpus.train.push_back(std::move(text));
    } else {
      corpus.train.push_back(background_text(options.sample_length, lexicon, domain, zipf, rng));
    }
  }
  for (std::size_t i = 0; i < options.validation_samples; ++i) {
    corpus.validation.push_back(background_text(options.sample_length, lexicon, domain, zipf, rng));
  }
  for (std::size_t i = 0; i < options.pretrain_samples; ++i) {
    corpus.pretrain.push_back(background_text(options.sample_length, lexicon, general, zipf, rng));
  }
  return corpus;
}

}  // namespace memaudit
