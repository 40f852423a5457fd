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

#ifndef MEMAUDIT_DESK_HPP_
#define MEMAUDIT_DESK_HPP_

#include <cstddef>
#include <cstdint>

#include "memaudit/synthetic.hpp"
#include "memaudit/trainer.hpp"

namespace memaudit {

// The small CPU experiment used for the memorisation-dynamics checks: a base
// model pretrained once on general text, then fine-tuned per seed on the
// domain-shifted secret corpus. Runs over the default alphabet tokenizer.
struct DeskExperiment {
  // Random-character secret; used for the dynamics and early-stopping runs.
  SecretCorpusOptions corpus;
  // Same shape, but the secret is lexicon words with one letter changed in a
  // smaller, more predictable language. The regulariser caps how far a gram
  // may rise above the base model, which only blocks greedy extraction where
  // the base model prefers a different token; random characters never meet
  // that condition, misspelt common words do.
  SecretCorpusOptions mitigation_corpus;
  // Fine-tuning configuration; call set_run_seed per run.
  TrainConfig train;
  std::size_t pretrain_epochs = 10;
  std::uint64_t pretrain_seed = 7;
  // Lambda chosen from {0.1, 1, 10} for the n-gram regulariser.
  double ngram_reg_lambda = 10.0;
  std::uint64_t goldfish_period = 4;
};

DeskExperiment desk_experiment();

}  // namespace memaudit

#endif  // MEMAUDIT_DESK_HPP_
