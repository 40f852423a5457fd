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

// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "memaudit/corpus.hpp"
#include "memaudit/desk.hpp"
#include "memaudit/losses.hpp"
#include "memaudit/metrics.hpp"
#include "memaudit/model.hpp"
#include "memaudit/random.hpp"
#include "memaudit/report.hpp"
#include "memaudit/synthetic.hpp"
#include "memaudit/tokenizer.hpp"
#include "memaudit/trainer.hpp"

namespace {

using namespace memaudit;
namespace fs = std::filesystem;

struct Verdict {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* title, const std::function<Verdict()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Verdict v;
  try {
    v = body();
  } catch (const std::exception& e) {
    v = {false, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (!v.pass) ++failures;
  std::printf("criterion %d %-28s %s  (%.1f s)  %s\n", id, title, v.pass ? "PASS" : "FAIL", secs,
              v.detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

TokenSeq random_seq(Rng& rng, std::size_t length, std::size_t vocab, Token lo = 0) {
  TokenSeq s(length);
  for (auto& t : s) t = static_cast<Token>(lo + rng.below(vocab - lo));
  return s;
}

ModelParams random_params(const ModelConfig& cfg, double scale, std::uint64_t seed) {
  ModelParams p(cfg);
  Rng rng(seed);
  for (double& v : p.values()) v = rng.uniform(-scale, scale);
  return p;
}

// ---- 1 -------------------------------------------------------------------

// Every n-gram as its own list entry; intersection by repeated removal.
std::vector<TokenSeq> gram_list(const TokenSeq& s, const std::vector<std::size_t>& sizes) {
  std::vector<TokenSeq> out;
  for (std::size_t n : sizes) {
    for (std::size_t i = 0; i + n <= s.size(); ++i) out.emplace_back(s.begin() + i, s.begin() + i + n);
  }
  return out;
}

std::size_t brute_intersection(std::vector<TokenSeq> a, std::vector<TokenSeq> b) {
  std::size_t hits = 0;
  for (const auto& g : a) {
    for (auto it = b.begin(); it != b.end(); ++it) {
      if (*it == g) {
        b.erase(it);
        ++hits;
        break;
      }
    }
  }
  return hits;
}

Verdict metric_oracle() {
  Rng rng(101);
  std::size_t mismatches = 0, nonzero = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t vocab = 2 + rng.below(4);
    const TokenSeq gen = random_seq(rng, rng.below(65), vocab);
    const TokenSeq target = random_seq(rng, rng.below(65), vocab);
    std::vector<std::size_t> sizes;
    while (sizes.empty()) {
      for (std::size_t n = 1; n <= 6; ++n) {
        if (rng.below(2)) sizes.push_back(n);
      }
    }
    const auto g = gram_list(gen, sizes), t = gram_list(target, sizes);
    const double inter = static_cast<double>(brute_intersection(g, t));
    const double gs = static_cast<double>(g.size()), ts = static_cast<double>(t.size());
    const struct {
      MatchNormalisation norm;
      double denom;
    } cases[] = {{MatchNormalisation::kTarget, ts},
                 {MatchNormalisation::kGenerated, gs},
                 {MatchNormalisation::kUnion, gs + ts - inter}};
    for (const auto& c : cases) {
      const double want = c.denom > 0 ? inter / c.denom : 0.0;
      const MatchScore got = match_fraction(gen, target, sizes, {c.norm, true});
      if (got.fraction != want || got.degenerate != (c.denom == 0)) ++mismatches;
    }
    if (inter > 0) ++nonzero;
  }
  return {mismatches == 0,
          std::to_string(mismatches) + " mismatches over 3000 comparisons (" +
              std::to_string(nonzero) + " triples with overlap)"};
}

// ---- 2 -------------------------------------------------------------------

TokenSeq naive_decode(const ModelParams& p, TokenSeq context, std::size_t length) {
  const std::size_t start = context.size();
  for (std::size_t i = 0; i < length; ++i) {
    const std::vector<double> logits = next_token_logits(p, context);
    std::size_t best = 0;
    for (std::size_t v = 1; v < logits.size(); ++v) {
      if (logits[v] > logits[best]) best = v;
    }
    context.push_back(static_cast<Token>(best));
  }
  return TokenSeq(context.begin() + static_cast<std::ptrdiff_t>(start), context.end());
}

Verdict extraction_oracle() {
  const ModelConfig cfg{12, 4, 6, 10, 0};
  const ModelParams p = random_params(cfg, 1.5, 202);
  const WindowModel model(p);
  Rng rng(203);
  std::size_t mismatches = 0, positives = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    ExtractionPair pair;
    pair.prefix = random_seq(rng, 1 + rng.below(10), cfg.vocab_size);
    const std::size_t L = 1 + rng.below(12);
    const std::size_t slack = rng.below(4);
    const TokenSeq out = naive_decode(p, pair.prefix, L + slack);
    switch (rng.below(3)) {
      case 0: {  // a window of the model's own continuation
        const std::size_t at = rng.below(slack + 1);
        pair.suffix.assign(out.begin() + static_cast<std::ptrdiff_t>(at),
                           out.begin() + static_cast<std::ptrdiff_t>(at + L));
        break;
      }
      case 1:  // one token off
        pair.suffix.assign(out.begin(), out.begin() + static_cast<std::ptrdiff_t>(L));
        pair.suffix[rng.below(L)] = static_cast<Token>(rng.below(cfg.vocab_size));
        break;
      default:
        pair.suffix = random_seq(rng, L, cfg.vocab_size);
    }
    const bool want =
        std::search(out.begin(), out.end(), pair.suffix.begin(), pair.suffix.end()) != out.end();
    if (want) ++positives;
    if (is_k_extractable(model, pair, slack) != want) ++mismatches;
  }
  return {mismatches == 0 && positives > 0,
          std::to_string(mismatches) + " mismatches over 1000 pairs (" + std::to_string(positives) +
              " extractable)"};
}

// ---- 3 -------------------------------------------------------------------

Verdict gradient_check() {
  const ModelConfig cfg{7, 3, 4, 5, 0};
  const ModelParams p = random_params(cfg, 1.0, 301);
  Rng rng(302);
  const TokenSeq sample = random_seq(rng, 12, cfg.vocab_size);

  LossConfig active;
  active.mode = LossMode::kNGramReg;
  active.lambda = 2.0;
  active.tau = 0.0;
  active.sizes = {1, 2};
  LossConfig inactive = active;
  inactive.tau = 0.05;
  LossConfig goldfish;
  goldfish.mode = LossMode::kGoldfish;
  goldfish.goldfish_period = 3;

  const ReferenceSnapshot other{random_params(cfg, 1.0, 303)};
  const ReferenceSnapshot self{p};
  const struct {
    const char* name;
    LossConfig loss;
    const ReferenceSnapshot* ref;
  } cases[] = {{"plain", LossConfig{}, &other},
               {"ngram_reg/active", active, &other},
               {"ngram_reg/inactive", inactive, &self},
               {"goldfish", goldfish, &other}};
  bool pass = true;
  std::string detail;
  for (const auto& c : cases) {
    const LossValue at = total_loss(p, *c.ref, sample, 3, c.loss, 9);
    const LossEvaluator f = [&](const ModelParams& q) { return total_loss(q, *c.ref, sample, 3, c.loss, 9); };
    const GradientCheckResult r = finite_diff_check(f, p, 64, 1e-5, 304);
    bool ok = r.max_relative_error <= 1e-4 && r.probes >= 64;
    if (c.loss.mode == LossMode::kNGramReg) {
      ok = ok && ((c.ref == &self) ? at.active_hinges == 0 : at.active_hinges > 0);
    }
    pass = pass && ok;
    detail += std::string(c.name) + fmt(" %.1e", r.max_relative_error) + "; ";
  }
  return {pass, detail};
}

// ---- 4 -------------------------------------------------------------------

Verdict penalty_cases() {
  const ModelConfig cfg{9, 3, 4, 6, 0};
  Rng rng(401);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const ModelParams p = random_params(cfg, 2.0, 402 + i);
    const TokenSeq s = random_seq(rng, 1 + rng.below(20), cfg.vocab_size);
    for (double tau : {0.0, 0.05, 0.5}) {
      LossConfig lc;
      lc.mode = LossMode::kNGramReg;
      lc.lambda = 3.0;
      lc.tau = tau;
      const LossValue v = ngram_reg_penalty(p, ReferenceSnapshot(p), s, lc);
      worst = std::max(worst, std::abs(v.reg_term));
    }
  }

  // One gram: p = 0.72 against p0 = 0.30 with tau 0.1, lambda 2.
  ModelParams single(ModelConfig{2, 1, 1, 1, 0});
  auto bias = single.block(Block::kOutput).last(2);
  bias[1] = std::log(0.72 / 0.28);
  const std::vector<double> ref = {std::log(0.30)};
  LossConfig lc;
  lc.mode = LossMode::kNGramReg;
  lc.lambda = 2.0;
  lc.tau = 0.1;
  lc.sizes = {1};
  const double got = ngram_reg_penalty(single, ref, TokenSeq{1}, lc).reg_term;
  const bool pass = worst == 0.0 && std::abs(got - 0.2048) <= 1e-12;
  return {pass, fmt("max |penalty| at theta0 %.3g; single gram %.15f", worst, got)};
}

// ---- 5 -------------------------------------------------------------------

Verdict goldfish_reduction() {
  const ModelConfig cfg{11, 4, 5, 7, 0};
  const ModelParams p = random_params(cfg, 1.0, 501);
  Rng rng(502);
  LossConfig never;
  never.mode = LossMode::kGoldfish;
  never.goldfish_period.reset();
  std::size_t differ = 0;
  for (std::size_t i = 0; i < 100; ++i) {
    const TokenSeq s = random_seq(rng, 2 + rng.below(30), cfg.vocab_size);
    const LossValue a = goldfish_loss(p, s, i, never, 503);
    const LossValue b = lm_loss(p, s);
    if (a.total != b.total || a.gradient != b.gradient) ++differ;
  }
  return {differ == 0, std::to_string(differ) + " of 100 samples differ"};
}

// ---- 6-9: desk experiment ---------------------------------------------------

struct SeedRuns {
  RunReport plain;
  RunReport threshold;
  std::vector<RunReport> reg;  // one per lambda
};

const double kLambdas[] = {0.1, 1.0, 10.0};

struct Desk {
  DeskExperiment setup = desk_experiment();
  std::vector<SeedRuns> dynamics;    // random-character secret
  std::vector<SeedRuns> mitigation;  // misspelt-word secret; no threshold runs
  double plain_seconds = 0.0;
};

double mem_at(const RunReport& r, std::size_t epoch) { return r.epochs.at(epoch - 1).mean_mem_percent(); }

std::vector<SeedRuns> run_desk(const DeskExperiment& setup, const SecretCorpusOptions& options,
                               bool with_threshold, double* plain_seconds) {
  const SecretCorpus sc = make_secret_corpus(options);
  const AlphabetTokenizer tok = AlphabetTokenizer::Default();
  const Corpus train = make_corpus("train", Split::kTrain, sc.train, tok);
  const Corpus val = make_corpus("val", Split::kValidation, sc.validation, tok);
  const Corpus pre = make_corpus("pretrain", Split::kTrain, sc.pretrain, tok);
  TrainConfig pcfg = setup.train;
  pcfg.set_run_seed(setup.pretrain_seed);
  double seconds = 0.0;
  auto timed = [&seconds](auto&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    auto r = f();
    seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
  };
  const ModelParams base = timed([&] { return pretrain(pre, pcfg, setup.pretrain_epochs); });
  std::vector<SeedRuns> out;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    TrainConfig cfg = setup.train;
    cfg.set_run_seed(seed);
    SeedRuns runs;
    runs.plain = timed([&] { return fit(train, val, cfg, &base).report; });
    if (with_threshold) {
      TrainConfig th = cfg;
      th.stop.variant = StopVariant::kNGramThreshold;
      th.stop.threshold = 20.0;
      th.stop.halt = true;
      runs.threshold = fit(train, val, th, &base).report;
    }
    for (double lambda : kLambdas) {
      TrainConfig rc = cfg;
      rc.loss.mode = LossMode::kNGramReg;
      rc.loss.lambda = lambda;
      rc.loss.tau = 0.05;
      runs.reg.push_back(fit(train, val, rc, &base).report);
    }
    out.push_back(std::move(runs));
  }
  if (plain_seconds) *plain_seconds = seconds;
  return out;
}

const Desk& desk() {
  static const Desk d = [] {
    Desk d;
    d.dynamics = run_desk(d.setup, d.setup.corpus, true, &d.plain_seconds);
    d.mitigation = run_desk(d.setup, d.setup.mitigation_corpus, false, nullptr);
    return d;
  }();
  return d;
}

Verdict dynamics() {
  const Desk& d = desk();
  int rising = 0, early = 0;
  for (const SeedRuns& s : d.dynamics) {
    const RunReport& r = s.plain;
    if (r.epochs.size() >= 3 && mem_at(r, 1) < mem_at(r, 2) && mem_at(r, 2) < mem_at(r, 3)) ++rising;
    const std::size_t bv = r.selected.best_val;
    std::size_t ever = 0, before = 0;
    for (const auto& h : r.histories) {
      if (const auto m = h.memorisation_epoch()) {
        ++ever;
        if (*m < bv) ++before;
      }
    }
    if (ever > 0 && 2 * before >= ever) ++early;
  }
  return {rising >= 8 && early >= 8 && d.plain_seconds < 120.0,
          fmt("(a) rising in %g/10 seeds, (b) early in %g/10 seeds; pretrain + plain fits %.1f s",
              rising, early, d.plain_seconds)};
}

Verdict precursor() {
  const Desk& d = desk();
  int ok = 0;
  for (const SeedRuns& s : d.dynamics) {
    const TransitionSummary ts = track_transitions(s.plain.histories);
    std::size_t checked = 0;
    bool above = true;
    for (const auto& t : ts.transitions) {
      if (t.epoch < 2) continue;
      ++checked;
      const auto& base = ts.baseline.at(t.epoch - 1);
      if (!base || !(t.median > *base)) above = false;
    }
    if (above && checked > 0) ++ok;
  }
  return {ok >= 8, fmt("precursor median above baseline in %g/10 seeds", ok)};
}

struct Ratios {
  double mem = 0.0;
  double ppl = 0.0;
};

// Final-epoch Mem % and val perplexity of the regularised runs relative to
// plain, averaged over seeds; one entry per lambda.
std::vector<Ratios> reg_ratios(const std::vector<SeedRuns>& seeds) {
  double plain_mem = 0, plain_ppl = 0;
  for (const SeedRuns& s : seeds) {
    plain_mem += s.plain.epochs.back().mean_mem_percent();
    plain_ppl += s.plain.epochs.back().val_perplexity;
  }
  std::vector<Ratios> out;
  for (std::size_t li = 0; li < std::size(kLambdas); ++li) {
    double mem = 0, ppl = 0;
    for (const SeedRuns& s : seeds) {
      mem += s.reg[li].epochs.back().mean_mem_percent();
      ppl += s.reg[li].epochs.back().val_perplexity;
    }
    out.push_back({mem / plain_mem, ppl / plain_ppl});
  }
  return out;
}

Verdict mitigation() {
  const Desk& d = desk();
  const auto ratios = reg_ratios(d.mitigation);
  std::optional<double> tuned;
  std::string detail = "misspelt-word secret: ";
  for (std::size_t li = 0; li < ratios.size(); ++li) {
    detail += fmt("lambda %g Mem x%.3f ppl x%.3f; ", kLambdas[li], ratios[li].mem, ratios[li].ppl);
    if (ratios[li].ppl <= 1.15 && (!tuned || ratios[li].mem < *tuned)) tuned = ratios[li].mem;
  }
  detail += "character secret (not gated): ";
  const auto chars = reg_ratios(d.dynamics);
  for (std::size_t li = 0; li < chars.size(); ++li) {
    detail += fmt("lambda %g Mem x%.3f ppl x%.3f; ", kLambdas[li], chars[li].mem, chars[li].ppl);
  }
  return {tuned && *tuned <= 0.70, detail};
}

Verdict early_stop() {
  const Desk& d = desk();
  double mem_t = 0, mem_b = 0, ppl_t = 0, ppl_b = 0;
  for (const SeedRuns& s : d.dynamics) {
    const RunReport& t = s.threshold;
    const RunReport& p = s.plain;
    mem_t += mem_at(t, t.selected_epoch);
    ppl_t += t.epochs.at(t.selected_epoch - 1).val_perplexity;
    mem_b += mem_at(p, p.selected.best_val);
    ppl_b += p.epochs.at(p.selected.best_val - 1).val_perplexity;
  }
  return {mem_t < mem_b && ppl_t <= 1.2 * ppl_b,
          fmt("Mem %.2f (threshold) vs %.2f (best_val); ppl ratio %.3f", mem_t / 10, mem_b / 10,
              ppl_t / ppl_b)};
}

// ---- 10 ------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int cli(std::vector<std::string> args) {
  args.insert(args.begin(), "memaudit");
  std::ostringstream out, err;
  return cli::run(args, out, err);
}

Verdict determinism() {
  DeskExperiment setup = desk_experiment();
  setup.corpus.pretrain_samples = 50;
  const SecretCorpus sc = make_secret_corpus(setup.corpus);
  const AlphabetTokenizer tok = AlphabetTokenizer::Default();
  const Corpus train = make_corpus("train", Split::kTrain, sc.train, tok);
  const Corpus val = make_corpus("val", Split::kValidation, sc.validation, tok);
  std::size_t differ = 0;
  for (LossMode mode : {LossMode::kPlain, LossMode::kNGramReg, LossMode::kGoldfish}) {
    TrainConfig cfg = setup.train;
    cfg.max_epochs = 2;
    cfg.loss.mode = mode;
    cfg.set_run_seed(3);
    if (report_to_json(fit(train, val, cfg).report) != report_to_json(fit(train, val, cfg).report)) ++differ;
  }

  // CLI: synth, a one-epoch sweep, audit and report, run twice in the same
  // directory so that every input (including paths) is identical.
  const fs::path dir = fs::temp_directory_path() / "memaudit_acceptance_determinism";
  const char* artefacts[] = {"data/train.jsonl", "data/experiment.spec", "runs/aggregate.csv",
                             "runs/base.ckpt", "runs/plain/seed_1/report.json",
                             "runs/ngram_reg/seed_1/report.json", "runs/goldfish/seed_1/report.json",
                             "runs/goldfish/seed_1/final.ckpt", "runs/fig1_memorisation.csv",
                             "runs/fig5_summary.csv", "audit/audit.json"};
  std::vector<std::string> first;
  std::string cli_differ;
  int bad_exit = 0;
  for (int pass = 0; pass < 2; ++pass) {
    fs::remove_all(dir);
    bad_exit += cli({"synth", "--out", (dir / "data").string(), "--seed", "11"}) != 0;
    // Shrink the written spec to one seed and one epoch.
    std::string spec = slurp(dir / "data" / "experiment.spec");
    auto set = [&spec](const std::string& key, const std::string& value) {
      const auto at = spec.find(key + " = ");
      const auto end = spec.find('\n', at);
      spec.replace(at, end - at, key + " = " + value);
    };
    set("seeds", "1");
    set("max_epochs", "1");
    set("pretrain_epochs", "1");
    std::ofstream(dir / "data" / "small.spec") << spec;
    bad_exit += cli({"sweep", "--spec", (dir / "data" / "small.spec").string(), "--out",
                     (dir / "runs").string()}) != 0;
    bad_exit += cli({"audit", "--ckpt", (dir / "runs" / "plain" / "seed_1" / "final.ckpt").string(),
                     "--corpus", (dir / "data" / "train.jsonl").string(), "--k", "8",
                     "--suffix-len", "12", "--out", (dir / "audit").string()}) != 0;
    bad_exit += cli({"report", "--dir", (dir / "runs").string()}) != 0;
    for (std::size_t i = 0; i < std::size(artefacts); ++i) {
      const std::string content = slurp(dir / artefacts[i]);
      if (pass == 0) {
        first.push_back(content);
      } else if (content.empty() || content != first[i]) {
        cli_differ += std::string(" ") + artefacts[i];
      }
    }
  }
  fs::remove_all(dir);
  return {differ == 0 && cli_differ.empty() && bad_exit == 0,
          fmt("%g/3 fit reports differ; %g failed commands; CLI artefacts differing:", differ, bad_exit) +
              (cli_differ.empty() ? std::string(" none") : cli_differ)};
}

}  // namespace

// With arguments, runs only the listed criterion numbers.
int main(int argc, char** argv) {
  const struct {
    const char* title;
    Verdict (*body)();
  } criteria[] = {{"metric oracle", metric_oracle},
                  {"extraction oracle", extraction_oracle},
                  {"gradient check", gradient_check},
                  {"regulariser cases", penalty_cases},
                  {"goldfish reduction", goldfish_reduction},
                  {"memorisation dynamics", dynamics},
                  {"precursor scores", precursor},
                  {"n-gram regulariser effect", mitigation},
                  {"early-stop trade-off", early_stop},
                  {"determinism", determinism}};
  std::vector<bool> wanted(std::size(criteria), argc < 2);
  for (int i = 1; i < argc; ++i) {
    const int id = std::atoi(argv[i]);
    if (id < 1 || id > static_cast<int>(std::size(criteria))) {
      std::fprintf(stderr, "unknown criterion: %s\n", argv[i]);
      return 2;
    }
    wanted[static_cast<std::size_t>(id - 1)] = true;
  }
  for (std::size_t i = 0; i < std::size(criteria); ++i) {
    if (wanted[i]) report(static_cast<int>(i + 1), criteria[i].title, criteria[i].body);
  }
  std::printf("%d criterion(s) failed\n", failures);
  return failures == 0 ? 0 : 1;
}
