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

#include "memaudit/desk.hpp"

namespace memaudit {

DeskExperiment desk_experiment() {
  DeskExperiment desk;
  desk.corpus.lexicon_size = 120;
  desk.corpus.min_word_length = 3;
  desk.corpus.max_word_length = 8;
  desk.mitigation_corpus = desk.corpus;
  desk.mitigation_corpus.secret_style = SecretStyle::kTypos;
  desk.mitigation_corpus.lexicon_size = 60;
  desk.mitigation_corpus.min_word_length = 2;
  desk.mitigation_corpus.max_word_length = 7;

  TrainConfig& t = desk.train;
  t.model = {64, 8, 16, 32, 0};
  t.max_epochs = 8;
  t.learning_rate = 0.1;
  t.reduction = StepReduction::kSum;
  t.max_grad_norm = 0.7;
  t.k_values = {8};
  t.suffix_length = 12;
  t.loss.tau = 0.05;
  t.loss.lambda = desk.ngram_reg_lambda;
  t.loss.goldfish_period = desk.goldfish_period;
  return desk;
}

}  // namespace memaudit
