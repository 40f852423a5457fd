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

#ifndef MEMAUDIT_REPORT_HPP_
#define MEMAUDIT_REPORT_HPP_

#include <ostream>
#include <span>
#include <string>
#include <string_view>

#include "memaudit/metrics.hpp"
#include "memaudit/trainer.hpp"

namespace memaudit {

// Label written next to every eval-accuracy figure.
inline constexpr const char* kEvalMetricLabel = "final-token accuracy (proxy task metric)";

// Full report as JSON. Wall-clock timings are left out so that reruns with
// identical inputs serialise identically; see timings_to_json.
std::string report_to_json(const RunReport& report);
// Throws DataError on malformed or incomplete input.
RunReport report_from_json(std::string_view text);

std::string timings_to_json(const RunReport& report);

// One row per (epoch, k): epoch,k,mem_percent,ngram_mem_percent,val_ppl,eval_acc
void write_epoch_csv(std::ostream& out, std::span<const EpochMetrics> epochs);

// One JSON object per line: sample_id, k, scores, verbatim, memorisation_epoch.
void write_histories_jsonl(std::ostream& out, std::span<const SampleScoreHistory> histories);

// step,sample_id,lm_term,reg_term,total,active_hinge_count
void write_loss_trace_header(std::ostream& out);
void write_loss_trace_row(std::ostream& out, const LossTraceRow& row);

}  // namespace memaudit

#endif  // MEMAUDIT_REPORT_HPP_
