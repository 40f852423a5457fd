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

#ifndef MEMAUDIT_CONFIG_HPP_
#define MEMAUDIT_CONFIG_HPP_

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "memaudit/trainer.hpp"

namespace memaudit {

// Flat `key = value` text. '#' starts a comment line; blank lines are ignored.
// Keys must be unique. Values are taken verbatim after trimming.
class KeyValueConfig {
 public:
  // Throws ParseError naming the offending line.
  static KeyValueConfig parse(std::string_view text);

  bool contains(std::string_view key) const;
  // Removes and returns the value for `key`.
  std::optional<std::string> take(std::string_view key);
  // Throws DataError listing every key nobody took.
  void reject_unknown() const;

 private:
  struct Entry {
    std::string value;
    std::size_t line = 0;
  };
  std::map<std::string, Entry, std::less<>> entries_;
};

// Scalar codecs shared by the config readers; all throw DataError.
std::size_t parse_count(std::string_view key, std::string_view value);
std::uint64_t parse_u64(std::string_view key, std::string_view value);
double parse_real(std::string_view key, std::string_view value);
bool parse_flag(std::string_view key, std::string_view value);
std::vector<std::size_t> parse_count_list(std::string_view key, std::string_view value);
std::vector<std::string> parse_name_list(std::string_view value);

// Shortest text that parses back to the same double.
std::string format_real(double value);
std::string join_counts(const std::vector<std::size_t>& values);

// Every TrainConfig field as `key = value` lines in a fixed order.
std::string format_train_config(const TrainConfig& cfg);
// Consumes the TrainConfig keys present in `kv`; absent keys keep the values
// already in `cfg`. Validates the result.
void read_train_config(KeyValueConfig& kv, TrainConfig& cfg);
TrainConfig parse_train_config(std::string_view text);

}  // namespace memaudit

#endif  // MEMAUDIT_CONFIG_HPP_
