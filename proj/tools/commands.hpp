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

#ifndef MEMAUDIT_TOOLS_COMMANDS_HPP_
#define MEMAUDIT_TOOLS_COMMANDS_HPP_

#include <filesystem>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "memaudit/trainer.hpp"

namespace memaudit::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2, kNumericFailure = 3 };

// Entry point shared by the executable and the tests. `args[0]` is the
// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation; 0 for a single value
};
MeanStd mean_and_stddev(std::span<const double> values);

struct SweepRun {
  std::string mode;
  std::uint64_t seed = 0;
  RunReport report;
};

// Aggregate table over finished runs: one row per loss mode at the configured
// criterion, plus the plain runs under n-gram threshold selection. Mem % is
// averaged over k first, then over seeds. Eval deltas are taken against the
// best eval accuracy of the plain run with the same seed.
std::string aggregate_csv(const std::vector<SweepRun>& runs, StopVariant criterion);

}  // namespace memaudit::cli

#endif  // MEMAUDIT_TOOLS_COMMANDS_HPP_
