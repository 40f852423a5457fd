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

#include "spec.hpp"

#include <fstream>
#include <sstream>

#include "memaudit/config.hpp"
#include "memaudit/errors.hpp"
#include "memaudit/tokenizer.hpp"

namespace memaudit::cli {

std::filesystem::path ExperimentSpec::resolve(const std::string& path) const {
  const std::filesystem::path p(path);
  return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
}

bool ExperimentSpec::operator==(const ExperimentSpec& o) const {
  return train_corpus == o.train_corpus && val_corpus == o.val_corpus &&
         pretrain_corpus == o.pretrain_corpus && pretrain_epochs == o.pretrain_epochs &&
         pretrain_seed == o.pretrain_seed && tokenizer == o.tokenizer &&
         max_samples == o.max_samples && seeds == o.seeds && modes == o.modes &&
         output_dir == o.output_dir && train == o.train;
}

ExperimentSpec parse_experiment_spec(std::string_view text, std::filesystem::path base_dir) {
  KeyValueConfig kv = KeyValueConfig::parse(text);
  ExperimentSpec spec;
  spec.base_dir = std::move(base_dir);
  auto str = [&kv](std::string_view key, std::string& field) {
    if (auto v = kv.take(key)) field = *v;
  };
  str("train_corpus", spec.train_corpus);
  str("val_corpus", spec.val_corpus);
  str("pretrain_corpus", spec.pretrain_corpus);
  str("tokenizer", spec.tokenizer);
  str("output_dir", spec.output_dir);
  if (auto v = kv.take("pretrain_epochs")) spec.pretrain_epochs = parse_count("pretrain_epochs", *v);
  if (auto v = kv.take("pretrain_seed")) spec.pretrain_seed = parse_u64("pretrain_seed", *v);
  if (auto v = kv.take("max_samples")) spec.max_samples = parse_count("max_samples", *v);
  if (auto v = kv.take("seeds")) {
    spec.seeds.clear();
    for (const auto& item : parse_name_list(*v)) spec.seeds.push_back(parse_u64("seeds", item));
    if (spec.seeds.empty()) throw DataError("config key 'seeds': expected at least one seed");
  }
  if (auto v = kv.take("modes")) {
    spec.modes.clear();
    for (const auto& item : parse_name_list(*v)) {
      try {
        spec.modes.push_back(parse_loss_mode(item));
      } catch (const std::invalid_argument& e) {
        throw DataError(std::string("config key 'modes': ") + e.what());
      }
    }
    if (spec.modes.empty()) throw DataError("config key 'modes': expected at least one mode");
  }
  read_train_config(kv, spec.train);
  kv.reject_unknown();

  if (spec.train_corpus.empty()) throw DataError("config key 'train_corpus' is required");
  if (spec.val_corpus.empty()) throw DataError("config key 'val_corpus' is required");
  if (spec.max_samples == 0) throw DataError("config key 'max_samples' must be >= 1");
  if (!spec.pretrain_corpus.empty() && spec.pretrain_epochs == 0) {
    throw DataError("config key 'pretrain_epochs' must be >= 1 when pretrain_corpus is set");
  }
  std::unique_ptr<Tokenizer> tok;
  try {
    tok = make_tokenizer(spec.tokenizer);
  } catch (const std::invalid_argument& e) {
    throw DataError(std::string("config key 'tokenizer': ") + e.what());
  }
  if (tok->vocab_size() != spec.train.model.vocab_size) {
    throw DataError("config key 'vocab_size' must equal the tokenizer vocabulary (" +
                    std::to_string(tok->vocab_size()) + ")");
  }
  for (LossMode mode : spec.modes) {
    if (mode == LossMode::kGoldfish && !spec.train.loss.goldfish_period) {
      throw DataError("mode goldfish needs a finite goldfish_period");
    }
  }
  return spec;
}

ExperimentSpec read_experiment_spec(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open spec file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_experiment_spec(text.str(), path.parent_path());
}

std::string format_experiment_spec(const ExperimentSpec& spec) {
  std::ostringstream out;
  out << "train_corpus = " << spec.train_corpus << '\n'
      << "val_corpus = " << spec.val_corpus << '\n';
  if (!spec.pretrain_corpus.empty()) out << "pretrain_corpus = " << spec.pretrain_corpus << '\n';
  out << "pretrain_epochs = " << spec.pretrain_epochs << '\n'
      << "pretrain_seed = " << spec.pretrain_seed << '\n'
      << "tokenizer = " << spec.tokenizer << '\n'
      << "max_samples = " << spec.max_samples << '\n'
      << "seeds = ";
  for (std::size_t i = 0; i < spec.seeds.size(); ++i) out << (i ? "," : "") << spec.seeds[i];
  out << "\nmodes = ";
  for (std::size_t i = 0; i < spec.modes.size(); ++i) {
    out << (i ? "," : "") << loss_mode_name(spec.modes[i]);
  }
  out << "\noutput_dir = " << spec.output_dir << '\n' << format_train_config(spec.train);
  return out.str();
}

}  // namespace memaudit::cli
