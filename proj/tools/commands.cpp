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

#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"
#include "memaudit/config.hpp"
#include "memaudit/corpus.hpp"
#include "memaudit/desk.hpp"
#include "memaudit/errors.hpp"
#include "memaudit/metrics.hpp"
#include "memaudit/model.hpp"
#include "memaudit/report.hpp"
#include "memaudit/synthetic.hpp"
#include "memaudit/tokenizer.hpp"
#include "spec.hpp"

namespace memaudit::cli {

namespace fs = std::filesystem;

namespace {

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
  if (!out) throw DataError("failed writing " + path.string());
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return text.str();
}

void make_dirs(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::string opt_real(const std::optional<double>& v) { return v ? format_real(*v) : ""; }

std::vector<std::size_t> parse_list_flag(const char* name, const std::string& value) {
  return parse_count_list(name, value);
}

// ---- audit ----------------------------------------------------------------

struct AuditArgs {
  std::string ckpt;
  std::string corpus;
  std::string k = "12,16,20";
  std::size_t suffix_len = 20;
  std::string ngrams = "4,5,6";
  std::uint64_t seed = 1;
  std::size_t slack = 0;
  std::size_t max_samples = kDefaultMaxSamples;
  std::string out = ".";
};

int cmd_audit(const AuditArgs& a, std::ostream& out) {
  const Checkpoint ckpt = load_checkpoint(a.ckpt);
  const auto tok = make_tokenizer(ckpt.tokenizer);
  if (tok->vocab_size() != ckpt.params.config().vocab_size) {
    throw DataError("checkpoint tokenizer does not match its vocabulary size");
  }
  const Corpus corpus = load_corpus(a.corpus, Split::kTrain, *tok, a.max_samples);
  const auto ks = parse_list_flag("--k", a.k);
  const NGramSizes sizes = normalise_sizes(parse_list_flag("--ngrams", a.ngrams));
  if (a.suffix_len == 0) throw DataError("--suffix-len must be >= 1");

  const WindowModel model(ckpt.params);
  std::ostringstream csv;
  csv << "k,pairs,skipped_short,collisions,mem_percent,ngram_mem_percent\n";
  nlohmann::json rows = nlohmann::json::array();
  double mem_sum = 0.0;
  for (std::size_t k : ks) {
    if (k == 0) throw DataError("--k values must be >= 1");
    PairSample sampled = sample_pairs(corpus, k, a.suffix_len, a.seed);
    const std::size_t skipped = sampled.skipped_short;
    CollisionFilterResult filtered = filter_collisions(std::move(sampled.pairs));
    if (filtered.pairs.empty()) {
      throw std::domain_error("no extractable pairs for k=" + std::to_string(k) + " (" +
                              std::to_string(skipped) + " samples too short)");
    }
    const auto scores = score_pairs(model, filtered.pairs, sizes, {}, a.slack);
    const double mem = verbatim_percent(scores);
    const double ngram = partial_percent(scores);
    mem_sum += mem;
    csv << k << ',' << filtered.pairs.size() << ',' << skipped << ',' << filtered.dropped << ','
        << format_real(mem) << ',' << format_real(ngram) << '\n';
    rows.push_back({{"k", k},
                    {"pairs", filtered.pairs.size()},
                    {"skipped_short", skipped},
                    {"collisions", filtered.dropped},
                    {"mem_percent", mem},
                    {"ngram_mem_percent", ngram}});
  }
  nlohmann::json doc = {{"checkpoint", a.ckpt},
                        {"corpus", a.corpus},
                        {"samples", corpus.size()},
                        {"source_records", corpus.source_records},
                        {"suffix_len", a.suffix_len},
                        {"ngrams", sizes},
                        {"pair_seed", a.seed},
                        {"slack", a.slack},
                        {"per_k", rows},
                        {"mean_mem_percent", mem_sum / static_cast<double>(ks.size())}};
  const fs::path dir(a.out);
  make_dirs(dir);
  write_file(dir / "audit.csv", csv.str());
  write_file(dir / "audit.json", doc.dump(1) + "\n");
  out << csv.str();
  return kOk;
}

// ---- sweep ----------------------------------------------------------------

struct SweepArgs {
  std::string spec;
  std::size_t seeds = 0;  // 0: keep the spec's list
  std::string out;
};

std::string run_dir_name(std::uint64_t seed) { return "seed_" + std::to_string(seed); }

int cmd_sweep(const SweepArgs& a, std::ostream& out, std::ostream& err) {
  ExperimentSpec spec = read_experiment_spec(a.spec);
  if (a.seeds > 0) {
    spec.seeds.clear();
    for (std::uint64_t s = 1; s <= a.seeds; ++s) spec.seeds.push_back(s);
  }
  const fs::path root = a.out.empty() ? spec.resolve(spec.output_dir) : fs::path(a.out);
  make_dirs(root);

  const auto tok = make_tokenizer(spec.tokenizer);
  const Corpus train = load_corpus(spec.resolve(spec.train_corpus), Split::kTrain, *tok,
                                   spec.max_samples);
  const Corpus val = load_corpus(spec.resolve(spec.val_corpus), Split::kValidation, *tok,
                                 spec.max_samples);
  if (train.truncated()) {
    err << "note: training corpus truncated from " << train.source_records << " to "
        << train.size() << " samples\n";
  }

  std::optional<ModelParams> base;
  if (!spec.pretrain_corpus.empty()) {
    const Corpus pre = load_corpus(spec.resolve(spec.pretrain_corpus), Split::kTrain, *tok,
                                   std::numeric_limits<std::size_t>::max());
    TrainConfig pcfg = spec.train;
    pcfg.set_run_seed(spec.pretrain_seed);
    base = pretrain(pre, pcfg, spec.pretrain_epochs);
    save_checkpoint(root / "base.ckpt", *base, tok->descriptor());
  }

  std::vector<SweepRun> runs;
  for (LossMode mode : spec.modes) {
    for (std::uint64_t seed : spec.seeds) {
      TrainConfig cfg = spec.train;
      cfg.set_run_seed(seed);
      cfg.loss.mode = mode;
      ExperimentSpec run_spec = spec;
      run_spec.seeds = {seed};
      run_spec.modes = {mode};
      run_spec.train = cfg;

      const fs::path dir = root / loss_mode_name(mode) / run_dir_name(seed);
      make_dirs(dir);
      std::ofstream trace(dir / "loss_trace.csv", std::ios::binary | std::ios::trunc);
      if (!trace) throw DataError("cannot write " + (dir / "loss_trace.csv").string());
      write_loss_trace_header(trace);
      std::vector<EpochMetrics> done;
      TrainHooks hooks;
      hooks.on_step = [&trace](const LossTraceRow& row) { write_loss_trace_row(trace, row); };
      hooks.on_epoch = [&](const EpochMetrics& m) {
        done.push_back(m);
        std::ostringstream csv;
        write_epoch_csv(csv, done);
        write_file(dir / "epochs.csv", csv.str());
      };
      hooks.on_abort = [&](const RunReport& partial) {
        RunReport r = partial;
        r.config_echo = format_experiment_spec(run_spec);
        write_file(dir / "report.partial.json", report_to_json(r));
      };

      FitResult fitted = fit(train, val, cfg, base ? &*base : nullptr, hooks);
      trace.close();
      fitted.report.config_echo = format_experiment_spec(run_spec);
      write_file(dir / "report.json", report_to_json(fitted.report));
      write_file(dir / "timings.json", timings_to_json(fitted.report));
      std::ostringstream hist;
      write_histories_jsonl(hist, fitted.report.histories);
      write_file(dir / "histories.jsonl", hist.str());
      save_checkpoint(dir / "final.ckpt", fitted.final_params, tok->descriptor());
      save_checkpoint(dir / "selected.ckpt", fitted.selected_params, tok->descriptor());
      out << loss_mode_name(mode) << " seed " << seed << ": selected epoch "
          << fitted.report.selected_epoch << ", Mem % "
          << format_real(fitted.report.epochs[fitted.report.selected_epoch - 1].mean_mem_percent())
          << '\n';
      runs.push_back({loss_mode_name(mode), seed, std::move(fitted.report)});
    }
  }
  write_file(root / "aggregate.csv", aggregate_csv(runs, spec.train.stop.variant));
  return kOk;
}

// ---- report ---------------------------------------------------------------

struct ReportArgs {
  std::string dir;
  std::string out;
};

struct LoadedRun {
  std::string name;
  RunReport report;
  std::string mode;
};

int cmd_report(const ReportArgs& a, std::ostream& out, std::ostream& err) {
  const fs::path dir(a.dir);
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + a.dir);
  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().filename() == "report.json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw DataError("no report.json found under " + a.dir);

  std::vector<LoadedRun> runs;
  std::vector<std::string> offenders;
  for (const auto& f : files) {
    std::string name = fs::relative(f.parent_path(), dir).generic_string();
    if (name.empty()) name = ".";
    try {
      RunReport r = report_from_json(read_file(f));
      auto kv = KeyValueConfig::parse(r.config_echo);
      std::string mode = kv.take("loss_mode").value_or("plain");
      runs.push_back({std::move(name), std::move(r), std::move(mode)});
    } catch (const std::exception& e) {
      offenders.push_back(f.generic_string() + ": " + e.what());
    }
  }
  if (!offenders.empty()) {
    err << "unreadable reports:\n";
    for (const auto& o : offenders) err << "  " << o << '\n';
    return kDataError;
  }

  std::ostringstream fig1, fig2, fig5, summary;
  fig1 << "run,epoch,new_memorisations,mem_percent,ngram_mem_percent,val_ppl,eval_acc\n";
  fig2 << "run,epoch,transition_count,median,min,max,baseline_mean,memorised_min,memorised_max\n";
  fig5 << "run,mode,criterion,epoch,mem_percent,ngram_mem_percent,val_ppl,eval_acc\n";
  summary << "mode,criterion,runs,mem_mean,mem_std,val_ppl_mean,eval_acc_mean\n";

  const StopVariant criteria[] = {StopVariant::kBestVal, StopVariant::kBestAcc,
                                  StopVariant::kNGramThreshold};
  std::map<std::pair<std::string, int>, std::vector<const EpochMetrics*>> grouped;
  for (const auto& run : runs) {
    const RunReport& r = run.report;
    const TransitionSummary ts = track_transitions(r.histories);
    for (const auto& e : r.epochs) {
      const std::size_t i = e.epoch - 1;
      fig1 << run.name << ',' << e.epoch << ',' << (i < ts.new_memorisations.size() ? ts.new_memorisations[i] : 0)
           << ',' << format_real(e.mean_mem_percent()) << ',' << format_real(e.ngram_mem_percent)
           << ',' << format_real(e.val_perplexity) << ',' << format_real(e.eval_accuracy) << '\n';
      const TransitionStats* t = nullptr;
      for (const auto& cand : ts.transitions) {
        if (cand.epoch == e.epoch) t = &cand;
      }
      std::string base, lo, hi;
      if (i < ts.baseline.size()) base = opt_real(ts.baseline[i]);
      if (i < ts.memorised_range.size() && ts.memorised_range[i]) {
        lo = format_real(ts.memorised_range[i]->min);
        hi = format_real(ts.memorised_range[i]->max);
      }
      fig2 << run.name << ',' << e.epoch << ',' << (t ? t->count : 0) << ','
           << (t ? format_real(t->median) : "") << ',' << (t ? format_real(t->min) : "") << ','
           << (t ? format_real(t->max) : "") << ',' << base << ',' << lo << ',' << hi << '\n';
    }
    for (StopVariant v : criteria) {
      const std::size_t epoch = v == StopVariant::kBestVal   ? r.selected.best_val
                                : v == StopVariant::kBestAcc ? r.selected.best_acc
                                                             : r.selected.ngram_threshold;
      const EpochMetrics& e = r.epochs[epoch - 1];
      fig5 << run.name << ',' << run.mode << ',' << stop_variant_name(v) << ',' << epoch << ','
           << format_real(e.mean_mem_percent()) << ',' << format_real(e.ngram_mem_percent) << ','
           << format_real(e.val_perplexity) << ',' << format_real(e.eval_accuracy) << '\n';
      grouped[{run.mode, static_cast<int>(v)}].push_back(&e);
    }
  }
  for (const auto& [key, epochs] : grouped) {
    std::vector<double> mem, ppl, acc;
    for (const EpochMetrics* e : epochs) {
      mem.push_back(e->mean_mem_percent());
      ppl.push_back(e->val_perplexity);
      acc.push_back(e->eval_accuracy);
    }
    const MeanStd m = mean_and_stddev(mem);
    summary << key.first << ',' << stop_variant_name(static_cast<StopVariant>(key.second)) << ','
            << epochs.size() << ',' << format_real(m.mean) << ',' << format_real(m.stddev) << ','
            << format_real(mean_and_stddev(ppl).mean) << ',' << format_real(mean_and_stddev(acc).mean)
            << '\n';
  }

  const fs::path target = a.out.empty() ? dir : fs::path(a.out);
  make_dirs(target);
  write_file(target / "fig1_memorisation.csv", fig1.str());
  write_file(target / "fig2_transitions.csv", fig2.str());
  write_file(target / "fig5_criteria.csv", fig5.str());
  write_file(target / "fig5_summary.csv", summary.str());
  out << "read " << runs.size() << " report(s); wrote plot tables to " << target.generic_string()
      << '\n';
  return kOk;
}

// ---- synth ----------------------------------------------------------------

struct SynthArgs {
  std::string out;
  std::uint64_t seed = SecretCorpusOptions{}.seed;
  bool mitigation = false;
};

std::string desk_experiment_spec_text() {
  const DeskExperiment desk = desk_experiment();
  ExperimentSpec spec;
  spec.train_corpus = "train.jsonl";
  spec.val_corpus = "val.jsonl";
  spec.pretrain_corpus = "pretrain.jsonl";
  spec.pretrain_epochs = desk.pretrain_epochs;
  spec.pretrain_seed = desk.pretrain_seed;
  spec.tokenizer = "alphabet";
  spec.seeds.clear();
  for (std::uint64_t s = 1; s <= 10; ++s) spec.seeds.push_back(s);
  spec.train = desk.train;
  return format_experiment_spec(spec);
}

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  SecretCorpusOptions options =
      a.mitigation ? desk_experiment().mitigation_corpus : desk_experiment().corpus;
  options.seed = a.seed;
  const SecretCorpus corpus = make_secret_corpus(options);
  const fs::path dir(a.out);
  make_dirs(dir);
  auto dump = [&dir](const char* name, const std::vector<std::string>& texts) {
    std::ostringstream s;
    write_corpus_jsonl(s, texts);
    write_file(dir / name, s.str());
  };
  dump("train.jsonl", corpus.train);
  dump("val.jsonl", corpus.validation);
  dump("pretrain.jsonl", corpus.pretrain);
  write_file(dir / "secret.txt", corpus.secret + "\n");
  write_file(dir / "experiment.spec", desk_experiment_spec_text());
  out << "wrote " << corpus.train.size() << " training samples (" << corpus.secret_ids.size()
      << " carrying the secret) to " << dir.generic_string() << '\n';
  return kOk;
}

}  // namespace

MeanStd mean_and_stddev(std::span<const double> values) {
  MeanStd r;
  if (values.empty()) return r;
  double sum = 0.0;
  for (double v : values) sum += v;
  r.mean = sum / static_cast<double>(values.size());
  if (values.size() > 1) {
    double sq = 0.0;
    for (double v : values) sq += (v - r.mean) * (v - r.mean);
    r.stddev = std::sqrt(sq / static_cast<double>(values.size() - 1));
  }
  return r;
}

std::string aggregate_csv(const std::vector<SweepRun>& runs, StopVariant criterion) {
  std::map<std::uint64_t, double> baseline_best;
  for (const auto& run : runs) {
    if (run.mode != loss_mode_name(LossMode::kPlain)) continue;
    double best = 0.0;
    for (const auto& e : run.report.epochs) best = std::max(best, e.eval_accuracy);
    baseline_best[run.seed] = best;
  }

  struct Row {
    std::string mode;
    StopVariant criterion;
    std::vector<double> mem, ngram, ppl, acc, delta;
  };
  std::vector<Row> rows;
  auto row_for = [&rows](const std::string& mode, StopVariant v) -> Row& {
    for (auto& r : rows) {
      if (r.mode == mode && r.criterion == v) return r;
    }
    rows.push_back({mode, v, {}, {}, {}, {}, {}});
    return rows.back();
  };
  auto add = [&](const SweepRun& run, StopVariant v, std::size_t epoch) {
    Row& row = row_for(run.mode, v);
    const EpochMetrics& e = run.report.epochs[epoch - 1];
    row.mem.push_back(e.mean_mem_percent());
    row.ngram.push_back(e.ngram_mem_percent);
    row.ppl.push_back(e.val_perplexity);
    row.acc.push_back(e.eval_accuracy);
    const auto it = baseline_best.find(run.seed);
    if (it != baseline_best.end()) row.delta.push_back(e.eval_accuracy - it->second);
  };
  for (const auto& run : runs) add(run, criterion, run.report.selected_epoch);
  if (criterion != StopVariant::kNGramThreshold) {
    for (const auto& run : runs) {
      if (run.mode == loss_mode_name(LossMode::kPlain)) {
        add(run, StopVariant::kNGramThreshold, run.report.selected.ngram_threshold);
      }
    }
  }

  std::ostringstream csv;
  csv << "mode,criterion,runs,mem_mean,mem_std,ngram_mem_mean,val_ppl_mean,eval_acc_mean,"
         "eval_delta_mean,eval_delta_std\n";
  for (const auto& row : rows) {
    const MeanStd mem = mean_and_stddev(row.mem);
    csv << row.mode << ',' << stop_variant_name(row.criterion) << ',' << row.mem.size() << ','
        << format_real(mem.mean) << ',' << format_real(mem.stddev) << ','
        << format_real(mean_and_stddev(row.ngram).mean) << ','
        << format_real(mean_and_stddev(row.ppl).mean) << ','
        << format_real(mean_and_stddev(row.acc).mean) << ',';
    if (row.delta.size() == row.mem.size()) {
      const MeanStd d = mean_and_stddev(row.delta);
      csv << format_real(d.mean) << ',' << format_real(d.stddev);
    } else {
      csv << ',';
    }
    csv << '\n';
  }
  return csv.str();
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Memorisation auditing and mitigation for causal language models", "memaudit"};
  app.require_subcommand(1);

  AuditArgs audit;
  auto* a = app.add_subcommand("audit", "Measure Mem % and n-gram Mem % of a checkpoint on a corpus");
  a->add_option("--ckpt", audit.ckpt, "model checkpoint")->required();
  a->add_option("--corpus", audit.corpus, "JSONL corpus")->required();
  a->add_option("--k", audit.k, "prefix lengths")->capture_default_str();
  a->add_option("--suffix-len", audit.suffix_len, "suffix length L")->capture_default_str();
  a->add_option("--ngrams", audit.ngrams, "n-gram sizes")->capture_default_str();
  a->add_option("--seed", audit.seed, "pair sampling seed")->capture_default_str();
  a->add_option("--slack", audit.slack, "extra generated tokens")->capture_default_str();
  a->add_option("--max-samples", audit.max_samples, "corpus cap")->capture_default_str();
  a->add_option("--out", audit.out, "output directory")->capture_default_str();

  SweepArgs sweep;
  auto* s = app.add_subcommand("sweep", "Run every loss mode for every seed of an experiment spec");
  s->add_option("--spec", sweep.spec, "experiment spec file")->required();
  s->add_option("--seeds", sweep.seeds, "use seeds 1..N instead of the spec's list");
  s->add_option("--out", sweep.out, "output directory (overrides output_dir)");

  ReportArgs report;
  auto* r = app.add_subcommand("report", "Turn a sweep directory into plot-ready CSV tables");
  r->add_option("--dir", report.dir, "sweep output directory")->required();
  r->add_option("--out", report.out, "where to write the tables (default: --dir)");

  SynthArgs synth;
  auto* y = app.add_subcommand("synth", "Write the synthetic secret corpus and a matching spec");
  y->add_option("--out", synth.out, "output directory")->required();
  y->add_option("--seed", synth.seed, "corpus seed")->capture_default_str();
  y->add_flag("--mitigation", synth.mitigation,
              "misspelt-word secret variant used for the regulariser comparison");

  std::vector<std::string> reversed(args.rbegin(), args.rend() - (args.empty() ? 0 : 1));
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (a->parsed()) return cmd_audit(audit, out);
    if (s->parsed()) return cmd_sweep(sweep, out, err);
    if (r->parsed()) return cmd_report(report, out, err);
    if (y->parsed()) return cmd_synth(synth, out);
  } catch (const NumericError& e) {
    err << "numeric failure: " << e.what() << '\n';
    return kNumericFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kDataError;
  }
  return kUsage;
}

}  // namespace memaudit::cli
