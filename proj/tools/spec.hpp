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

#ifndef MEMAUDIT_TOOLS_SPEC_HPP_
#define MEMAUDIT_TOOLS_SPEC_HPP_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "memaudit/corpus.hpp"
#include "memaudit/losses.hpp"
#include "memaudit/trainer.hpp"

namespace memaudit::cli {

// Declarative description of a sweep. Paths are kept as written; relative
// ones resolve against base_dir (the directory holding the spec file).
struct ExperimentSpec {
  std::string train_corpus;
  std::string val_corpus;
  std::string pretrain_corpus;  // optional: fine-tune from a pretrained base
  std::size_t pretrain_epochs = 0;
  std::uint64_t pretrain_seed = 1;
  std::string tokenizer = "byte";
  std::size_t max_samples = kDefaultMaxSamples;
  std::vector<std::uint64_t> seeds = {1};
  std::vector<LossMode> modes = {LossMode::kPlain, LossMode::kNGramReg, LossMode::kGoldfish};
  std::string output_dir = "runs";
  TrainConfig train;

  std::filesystem::path base_dir;

  std::filesystem::path resolve(const std::string& path) const;
  bool operator==(const ExperimentSpec& other) const;
};

// Throws ParseError / DataError; unknown keys are rejected.
ExperimentSpec parse_experiment_spec(std::string_view text, std::filesystem::path base_dir = {});
ExperimentSpec read_experiment_spec(const std::filesystem::path& path);
// Every key, fixed order; parse_experiment_spec(format_experiment_spec(s)) == s.
std::string format_experiment_spec(const ExperimentSpec& spec);

}  // namespace memaudit::cli

#endif  // MEMAUDIT_TOOLS_SPEC_HPP_
