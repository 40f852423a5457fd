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

#ifndef MEMAUDIT_ERRORS_HPP_
#define MEMAUDIT_ERRORS_HPP_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace memaudit {

// Unreadable or malformed input data (files, corpora, checkpoints, reports).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A JSONL/config line that failed to parse. `line()` is 1-based.
class ParseError : public DataError {
 public:
  ParseError(std::size_t line, const std::string& what)
      : DataError("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Non-finite loss or gradient encountered during training or probing.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace memaudit

#endif  // MEMAUDIT_ERRORS_HPP_
