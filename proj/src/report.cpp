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

#include "memaudit/report.hpp"

#include "json.hpp"

#include "memaudit/config.hpp"
#include "memaudit/errors.hpp"

namespace memaudit {

using nlohmann::json;

namespace {

json per_k(const std::map<std::size_t, double>& values) {
  json out = json::object();
  for (const auto& [k, v] : values) out[std::to_string(k)] = v;
  return out;
}

std::map<std::size_t, double> per_k_from(const json& j) {
  std::map<std::size_t, double> out;
  for (const auto& [key, value] : j.items()) {
    out[parse_count("k", key)] = value.get<double>();
  }
  return out;
}

json epoch_json(const EpochMetrics& e) {
  return {{"epoch", e.epoch},
          {"mem_percent", per_k(e.mem_percent)},
          {"ngram_mem_by_k", per_k(e.ngram_mem_by_k)},
          {"ngram_mem_percent", e.ngram_mem_percent},
          {"val_perplexity", e.val_perplexity},
          {"eval_accuracy", e.eval_accuracy},
          {"train_loss", e.train_loss}};
}

EpochMetrics epoch_from(const json& j) {
  EpochMetrics e;
  e.epoch = j.at("epoch").get<std::size_t>();
  e.mem_percent = per_k_from(j.at("mem_percent"));
  e.ngram_mem_by_k = per_k_from(j.at("ngram_mem_by_k"));
  e.ngram_mem_percent = j.at("ngram_mem_percent").get<double>();
  e.val_perplexity = j.at("val_perplexity").get<double>();
  e.eval_accuracy = j.at("eval_accuracy").get<double>();
  e.train_loss = j.at("train_loss").get<double>();
  return e;
}

json history_json(const SampleScoreHistory& h) {
  json j = {{"sample_id", h.sample_id}, {"k", h.k}, {"scores", h.scores}};
  json flags = json::array();
  for (bool v : h.verbatim) flags.push_back(v);
  j["verbatim"] = std::move(flags);
  const auto m = h.memorisation_epoch();
  j["memorisation_epoch"] = m ? json(*m) : json(nullptr);
  return j;
}

SampleScoreHistory history_from(const json& j) {
  SampleScoreHistory h;
  h.sample_id = j.at("sample_id").get<std::size_t>();
  h.k = j.at("k").get<std::size_t>();
  h.scores = j.at("scores").get<std::vector<double>>();
  for (const auto& v : j.at("verbatim")) h.verbatim.push_back(v.get<bool>());
  if (h.scores.size() != h.verbatim.size()) throw DataError("history score/flag length mismatch");
  return h;
}

void put_csv_real(std::ostream& out, double v) { out << format_real(v); }

}  // namespace

std::string report_to_json(const RunReport& report) {
  json j;
  j["config"] = report.config_echo;
  j["eval_metric"] = kEvalMetricLabel;
  j["train_samples"] = report.train_samples;
  j["train_source_records"] = report.train_source_records;
  json stats = json::array();
  for (const auto& [k, s] : report.pair_stats) {
    stats.push_back({{"k", k},
                     {"pairs", s.pairs},
                     {"skipped_short", s.skipped_short},
                     {"collisions", s.collisions}});
  }
  j["pair_stats"] = std::move(stats);
  json epochs = json::array();
  for (const auto& e : report.epochs) epochs.push_back(epoch_json(e));
  j["epochs"] = std::move(epochs);
  j["selected"] = {{"best_val", report.selected.best_val},
                   {"best_acc", report.selected.best_acc},
                   {"ngram_threshold", report.selected.ngram_threshold}};
  j["selected_epoch"] = report.selected_epoch;
  j["halted_early"] = report.halted_early;
  j["skipped_short_steps"] = report.skipped_short_steps;
  j["fully_dropped_steps"] = report.fully_dropped_steps;
  json histories = json::array();
  for (const auto& h : report.histories) histories.push_back(history_json(h));
  j["histories"] = std::move(histories);
  return j.dump(1) + "\n";
}

RunReport report_from_json(std::string_view text) {
  RunReport r;
  try {
    const json j = json::parse(text);
    r.config_echo = j.at("config").get<std::string>();
    r.train_samples = j.at("train_samples").get<std::size_t>();
    r.train_source_records = j.at("train_source_records").get<std::size_t>();
    for (const auto& s : j.at("pair_stats")) {
      r.pair_stats[s.at("k").get<std::size_t>()] = {s.at("pairs").get<std::size_t>(),
                                                    s.at("skipped_short").get<std::size_t>(),
                                                    s.at("collisions").get<std::size_t>()};
    }
    for (const auto& e : j.at("epochs")) r.epochs.push_back(epoch_from(e));
    const json& sel = j.at("selected");
    r.selected.best_val = sel.at("best_val").get<std::size_t>();
    r.selected.best_acc = sel.at("best_acc").get<std::size_t>();
    r.selected.ngram_threshold = sel.at("ngram_threshold").get<std::size_t>();
    r.selected_epoch = j.at("selected_epoch").get<std::size_t>();
    r.halted_early = j.at("halted_early").get<bool>();
    r.skipped_short_steps = j.at("skipped_short_steps").get<std::size_t>();
    r.fully_dropped_steps = j.at("fully_dropped_steps").get<std::size_t>();
    for (const auto& h : j.at("histories")) r.histories.push_back(history_from(h));
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed report: ") + e.what());
  }
  for (std::size_t i = 0; i < r.epochs.size(); ++i) {
    if (r.epochs[i].epoch != i + 1) throw DataError("malformed report: epochs out of order");
  }
  const std::size_t n = r.epochs.size();
  auto in_range = [n](std::size_t e) { return e >= 1 && e <= n; };
  if (!in_range(r.selected_epoch) || !in_range(r.selected.best_val) ||
      !in_range(r.selected.best_acc) || !in_range(r.selected.ngram_threshold)) {
    throw DataError("malformed report: selected epoch outside the recorded epochs");
  }
  for (const auto& h : r.histories) {
    if (h.epochs() != n) throw DataError("malformed report: history length differs from epoch count");
  }
  return r;
}

std::string timings_to_json(const RunReport& report) {
  return json{{"epoch_seconds", report.epoch_seconds}}.dump(1) + "\n";
}

void write_epoch_csv(std::ostream& out, std::span<const EpochMetrics> epochs) {
  out << "epoch,k,mem_percent,ngram_mem_percent,val_ppl,eval_acc\n";
  for (const auto& e : epochs) {
    for (const auto& [k, mem] : e.mem_percent) {
      const auto ng = e.ngram_mem_by_k.find(k);
      out << e.epoch << ',' << k << ',';
      put_csv_real(out, mem);
      out << ',';
      put_csv_real(out, ng == e.ngram_mem_by_k.end() ? e.ngram_mem_percent : ng->second);
      out << ',';
      put_csv_real(out, e.val_perplexity);
      out << ',';
      put_csv_real(out, e.eval_accuracy);
      out << '\n';
    }
  }
}

void write_histories_jsonl(std::ostream& out, std::span<const SampleScoreHistory> histories) {
  for (const auto& h : histories) out << history_json(h).dump() << '\n';
}

void write_loss_trace_header(std::ostream& out) {
  out << "step,sample_id,lm_term,reg_term,total,active_hinge_count\n";
}

void write_loss_trace_row(std::ostream& out, const LossTraceRow& row) {
  out << row.step << ',' << row.sample_id << ',' << format_real(row.lm_term) << ','
      << format_real(row.reg_term) << ',' << format_real(row.total) << ',' << row.active_hinges
      << '\n';
}

}  // namespace memaudit
