#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "specdec/cli.hpp"
#include "specdec/strategies.hpp"

namespace specdec::cli {

namespace {

constexpr std::uint64_t kFallbackSeed = 7;

struct Options {
  std::size_t vocab = 256;
  std::size_t len = 200;
  std::uint64_t seed = kFallbackSeed;
  double p_top1 = 0.9;
  double p_top2 = 0.7;
  double burst = 2.0;
  double tau = 0.4;
  std::size_t draft_len = 8;
  std::size_t max_draft_len = 24;
  std::size_t branch_k = 2;
  std::size_t max_branches = 4;
  std::size_t merge_window = 1;
  std::string cost_preset = "8to1";
  std::size_t repeats = 1;
  std::string out = "-";
  std::string target_trace;
  std::string draft_trace;
  std::string strategies;
  std::string rank_out;
  std::string summary_out;
  std::string transcript_out;
  std::string var = "tau";
  std::string grid;
  bool len_given = false;
};

std::uint64_t default_seed() {
  const char* env = std::getenv("SPECASR_SEED");
  if (env == nullptr || *env == '\0') return kFallbackSeed;
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(env, &end, 10);
  if (errno != 0 || *end != '\0' || env[0] == '-') {
    throw Error(ErrorCode::ConfigError, std::string("SPECASR_SEED is not an unsigned integer: ") + env);
  }
  return v;
}

std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::vector<double> parse_grid(const std::string& s) {
  std::vector<double> out;
  for (const auto& item : split(s)) {
    char* end = nullptr;
    const double v = std::strtod(item.c_str(), &end);
    if (end == item.c_str() || *end != '\0') {
      throw Error(ErrorCode::ConfigError, "bad grid value '" + item + "'");
    }
    out.push_back(v);
  }
  if (out.empty()) throw Error(ErrorCode::ConfigError, "grid is empty");
  return out;
}

std::string real(double v, const char* fmt = "%.6f") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, v);
  return buf;
}

/// Output file or the caller's stream.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) {
    if (path.empty() || path == "-") {
      stream_ = &fallback;
      return;
    }
    file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
    if (!*file_) throw Error(ErrorCode::IoError, "cannot write " + path);
    stream_ = file_.get();
  }
  std::ostream& operator*() { return *stream_; }
  void close() {
    stream_->flush();
    if (!*stream_) throw Error(ErrorCode::IoError, "write failed");
  }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_ = nullptr;
};

struct GridPoint {
  double value = 0.0;
  Options opts;
  CostModel cost;
};

struct Job {
  StrategyKind kind;
  std::size_t grid = 0;
  std::size_t repeat = 0;
  CsvRow row;
};

AgreementProfile profile(const Options& o) { return {o.p_top1, o.p_top2, o.burst}; }

StrategyConfig strategy_config(const Options& o, StrategyKind kind, std::size_t out_len) {
  StrategyConfig cfg;
  cfg.kind = kind;
  cfg.draft_len = o.draft_len;
  cfg.max_draft_len = o.max_draft_len;
  cfg.tau = o.tau;
  cfg.branch_k = o.branch_k;
  cfg.max_branches = o.max_branches;
  cfg.merge_window = o.merge_window;
  cfg.max_output_len = out_len;
  return cfg;
}

std::size_t reported_draft_len(const StrategyConfig& cfg) {
  switch (cfg.kind) {
    case StrategyKind::Autoregressive: return 0;
    case StrategyKind::BaselineSpec: return cfg.draft_len;
    default: return cfg.max_draft_len;
  }
}

std::size_t first_difference(std::span<const TokenId> a, std::span<const TokenId> b) {
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    if (a[i] != b[i]) return i;
  }
  return n;
}

struct Experiment {
  std::vector<StrategyKind> strategies;
  std::vector<GridPoint> grid;
  std::vector<Job> jobs;
  std::vector<std::vector<TokenId>> transcripts;  // AR reference per (grid, repeat)
};

void run_experiment(Experiment& ex, std::size_t repeats) {
  for (std::size_t g = 0; g < ex.grid.size(); ++g) {
    const auto& point = ex.grid[g];
    const Options& o = point.opts;
    ModelPair pair;
    std::size_t out_len = o.len;
    TokenId eos = kEosToken;
    const bool traced = !o.target_trace.empty();
    if (traced) {
      pair = load_trace_pair(o.target_trace, o.draft_trace);
      const auto& t = static_cast<const TraceModel&>(*pair.target);
      eos = t.eos();
      out_len = o.len_given ? std::min(o.len, t.records().size()) : t.records().size();
    }
    for (std::size_t r = 0; r < repeats; ++r) {
      const std::uint64_t seed = o.seed + r;
      if (!traced) {
        SyntheticParams sp;
        sp.vocab_size = o.vocab;
        sp.seed = seed;
        sp.horizon = std::max<std::size_t>(8192, 2 * o.len + 64);
        pair = make_synthetic_pair(sp, profile(o));
      }
      const Sequence prompt;
      auto ref_cfg = strategy_config(o, StrategyKind::Autoregressive, out_len);
      ref_cfg.eos = eos;
      const DecodeResult reference = decode(pair, prompt, ref_cfg);
      ex.transcripts.push_back(reference.output.tokens);
      for (StrategyKind kind : ex.strategies) {
        auto cfg = strategy_config(o, kind, out_len);
        cfg.eos = eos;
        const DecodeResult res =
            kind == StrategyKind::Autoregressive ? reference : decode(pair, prompt, cfg);
        if (res.output != reference.output) {
          const std::size_t at = first_difference(res.output.tokens, reference.output.tokens);
          throw Error(ErrorCode::TranscriptMismatch,
                      std::string(to_string(kind)) + " differs from the autoregressive transcript at position " +
                          std::to_string(at) + " (seed " + std::to_string(seed) + ")");
        }
        Job job{kind, g, r, {}};
        job.row.strategy = std::string(to_string(kind));
        job.row.seed = seed;
        job.row.p_top1 = o.p_top1;
        job.row.p_top2 = o.p_top2;
        job.row.tau = o.tau;
        job.row.draft_len = reported_draft_len(cfg);
        job.row.metrics = res.metrics;
        job.row.latency = simulated_latency(res.metrics, point.cost);
        job.row.speedup_vs_ar = speedup(res.metrics, reference.metrics, point.cost);
        ex.jobs.push_back(std::move(job));
      }
    }
  }
  std::stable_sort(ex.jobs.begin(), ex.jobs.end(), [&](const Job& a, const Job& b) {
    auto rank = [&](StrategyKind k) {
      return std::find(ex.strategies.begin(), ex.strategies.end(), k) - ex.strategies.begin();
    };
    if (rank(a.kind) != rank(b.kind)) return rank(a.kind) < rank(b.kind);
    if (a.grid != b.grid) return a.grid < b.grid;
    return a.repeat < b.repeat;
  });
}

void write_outputs(const Experiment& ex, const Options& o, std::ostream& out) {
  Sink csv(o.out, out);
  *csv << csv_header() << '\n';
  for (const auto& job : ex.jobs) *csv << format_csv_row(job.row) << '\n';
  csv.close();

  if (!o.rank_out.empty()) {
    Sink ranks(o.rank_out, out);
    *ranks << "strategy,rank,count,fraction\n";
    for (StrategyKind kind : ex.strategies) {
      std::vector<std::size_t> hist;
      for (const auto& job : ex.jobs) {
        if (job.kind != kind) continue;
        const auto& h = job.row.metrics.miss_rank;
        if (hist.size() < h.size()) hist.resize(h.size(), 0);
        for (std::size_t i = 0; i < h.size(); ++i) hist[i] += h[i];
      }
      std::size_t total = 0;
      for (auto c : hist) total += c;
      for (std::size_t i = 0; i < hist.size(); ++i) {
        const double frac = total ? static_cast<double>(hist[i]) / static_cast<double>(total) : 0.0;
        *ranks << to_string(kind) << ',' << (i == 0 ? std::string("none") : std::to_string(i)) << ','
               << hist[i] << ',' << real(frac) << '\n';
      }
    }
    ranks.close();
  }

  if (!o.summary_out.empty()) {
    Sink summary(o.summary_out, out);
    *summary << "strategy,grid,runs,mean_accept,accept_ratio,draft_steps,target_rounds,reuse_frac,"
                "ineffective_steps,sim_latency_draft,sim_latency_target,sim_latency_total\n";
    for (StrategyKind kind : ex.strategies) {
      for (std::size_t g = 0; g < ex.grid.size(); ++g) {
        std::vector<RunMetrics> runs;
        LatencyBreakdown lat;
        for (const auto& job : ex.jobs) {
          if (job.kind != kind || job.grid != g) continue;
          runs.push_back(job.row.metrics);
          lat.draft += job.row.latency.draft;
          lat.target += job.row.latency.target;
          lat.total += job.row.latency.total;
        }
        const auto s = summarize(runs);
        const double n = static_cast<double>(s.runs);
        *summary << to_string(kind) << ',' << real(ex.grid[g].value, "%g") << ',' << s.runs << ','
                 << real(s.mean_accept) << ',' << real(s.accept_ratio) << ','
                 << real(s.draft_steps, "%.4f") << ',' << real(s.target_rounds, "%.4f") << ','
                 << real(s.reuse_frac) << ',' << real(s.ineffective_steps, "%.4f") << ','
                 << real(lat.draft / n, "%.4f") << ',' << real(lat.target / n, "%.4f") << ','
                 << real(lat.total / n, "%.4f") << '\n';
      }
    }
    summary.close();
  }

  if (!o.transcript_out.empty()) {
    Sink tr(o.transcript_out, out);
    for (const auto& t : ex.transcripts) {
      for (std::size_t i = 0; i < t.size(); ++i) *tr << (i ? " " : "") << t[i];
      *tr << '\n';
    }
    tr.close();
  }
}

std::vector<StrategyKind> parse_strategies(const std::string& list,
                                           std::vector<StrategyKind> fallback) {
  if (list.empty()) return fallback;
  std::vector<StrategyKind> out;
  for (const auto& name : split(list)) {
    const StrategyKind k = parse_strategy(name);
    if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(k);
  }
  if (out.empty()) throw Error(ErrorCode::ConfigError, "no strategies given");
  return out;
}

void check_options(const Options& o) {
  if (o.repeats == 0) throw Error(ErrorCode::ConfigError, "repeats must be >= 1");
  if (o.len == 0) throw Error(ErrorCode::ConfigError, "len must be >= 1");
  if (o.target_trace.empty() != o.draft_trace.empty()) {
    throw Error(ErrorCode::ConfigError, "--target-trace and --draft-trace go together");
  }
  AgreementProfile p = profile(o);
  p.validate();
  SyntheticParams sp;
  sp.vocab_size = o.vocab;
  sp.validate();
  StrategyConfig cfg = strategy_config(o, StrategyKind::Tsp, o.len);
  cfg.validate(sp.top_k);
}

GridPoint grid_point(const Options& base, const std::string& var, double value) {
  GridPoint g{value, base, cost_preset(base.cost_preset)};
  if (var == "tau") {
    g.opts.tau = value;
  } else if (var == "draft_len") {
    if (value < 1 || value != static_cast<double>(static_cast<std::size_t>(value))) {
      throw Error(ErrorCode::ConfigError, "draft_len grid values must be positive integers");
    }
    g.opts.draft_len = g.opts.max_draft_len = static_cast<std::size_t>(value);
  } else if (var == "p_top1") {
    g.opts.p_top1 = value;
  } else if (var == "cost_ratio") {
    if (!(value > 0)) throw Error(ErrorCode::ConfigError, "cost_ratio must be positive");
    // Scale the target costs so target_base / draft_base equals the value.
    const double scale = value * g.cost.draft_base / g.cost.target_base;
    g.cost.target_base *= scale;
    g.cost.target_per_token *= scale;
  } else {
    throw Error(ErrorCode::ConfigError, "unknown sweep variable '" + var + "'");
  }
  check_options(g.opts);
  return g;
}

void cmd_gen_trace(const Options& o) {
  check_options(o);
  if (o.out.empty() || o.out == "-") throw Error(ErrorCode::ConfigError, "gen-trace needs --out PREFIX");
  SyntheticParams sp;
  sp.vocab_size = o.vocab;
  sp.seed = o.seed;
  sp.eos_position = o.len - 1;
  sp.horizon = std::max<std::size_t>(8192, 2 * o.len + 64);
  const auto agreement = profile(o);
  SyntheticTarget target(sp);
  SyntheticDraft draft(sp, agreement);

  std::vector<Distribution> t_records, d_records;
  std::vector<TokenId> context;
  std::size_t agree = 0, misses = 0, rank2 = 0;
  for (std::size_t p = 0; p < o.len; ++p) {
    t_records.push_back(target.distribution(context));
    d_records.push_back(draft.distribution(context));
    const TokenId truth = t_records.back().argmax();
    if (d_records.back().argmax() == truth) {
      ++agree;
    } else {
      ++misses;
      if (d_records.back().rank_of(truth) == std::optional<std::size_t>(2)) ++rank2;
    }
    context.push_back(truth);
  }
  const std::string target_path = o.out + ".target.jsonl";
  const std::string draft_path = o.out + ".draft.jsonl";
  write_trace(target_path, t_records);
  write_trace(draft_path, d_records);

  nlohmann::ordered_json manifest;
  manifest["vocab"] = o.vocab;
  manifest["records"] = o.len;
  manifest["eos"] = kEosToken;
  manifest["seed"] = o.seed;
  manifest["profile"] = {{"p_top1", o.p_top1}, {"p_top2", o.p_top2}, {"burst", o.burst}};
  manifest["target"] = std::filesystem::path(target_path).filename().string();
  manifest["draft"] = std::filesystem::path(draft_path).filename().string();
  manifest["realized"] = {
      {"top1_agreement", static_cast<double>(agree) / static_cast<double>(o.len)},
      {"top1_misses", misses},
      {"rank2_given_miss", misses ? static_cast<double>(rank2) / static_cast<double>(misses) : 0.0}};
  std::ofstream m(o.out + ".manifest.json", std::ios::binary | std::ios::trunc);
  if (!m) throw Error(ErrorCode::IoError, "cannot write " + o.out + ".manifest.json");
  m << manifest.dump(2) << '\n';
  if (!m) throw Error(ErrorCode::IoError, "write failed for " + o.out + ".manifest.json");
}

void add_model_options(CLI::App& app, Options& o) {
  app.add_option("--vocab", o.vocab, "Vocabulary size of the synthetic pair");
  app.add_option("--len", o.len, "Output tokens per decode (trace length for gen-trace)");
  app.add_option("--seed", o.seed, "Base seed; repeat r uses seed + r (default: $SPECASR_SEED or 7)");
  app.add_option("--p-top1", o.p_top1, "Stationary draft top-1 agreement");
  app.add_option("--p-top2", o.p_top2, "Chance the target token is the draft's rank 2 on a miss");
  app.add_option("--burst", o.burst, "Mean length of a disagreement burst");
}

void add_run_options(CLI::App& app, Options& o) {
  add_model_options(app, o);
  app.add_option("--tau", o.tau, "Truncation / marking threshold");
  app.add_option("--draft-len", o.draft_len, "Fixed draft length of the baseline");
  app.add_option("--max-draft-len", o.max_draft_len, "Draft cap for adaptive and tree drafting");
  app.add_option("--branch-k", o.branch_k, "Rank of the candidate that seeds a branch");
  app.add_option("--max-branches", o.max_branches, "Branches per sparse tree");
  app.add_option("--merge-window", o.merge_window, "Position slack allowed when grafting");
  app.add_option("--cost-preset", o.cost_preset, "Cost model")->check(CLI::IsMember({"8to1", "30to1"}));
  app.add_option("--repeats", o.repeats, "Repeats per configuration");
  app.add_option("--target-trace", o.target_trace, "Target trace (JSONL); replaces the synthetic pair");
  app.add_option("--draft-trace", o.draft_trace, "Draft trace (JSONL)");
  app.add_option("--rank-out", o.rank_out, "Write the draft-rank histogram of target tokens at misses");
  app.add_option("--summary-out", o.summary_out, "Write per-strategy summary rows");
  app.add_option("--transcript-out", o.transcript_out, "Write the reference transcripts");
}

// CLI11 only reads config files for the top-level app, so subcommands load
// theirs here. Options already given on the command line keep their value.
void apply_config_file(CLI::App& sub, const std::string& path) {
  if (!std::filesystem::exists(path)) {
    throw Error(ErrorCode::IoError, "cannot open config file " + path);
  }
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_file(path);
  } catch (const CLI::Error& e) {
    throw Error(ErrorCode::ConfigError, "bad config file " + path + ": " + e.what());
  }
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--") continue;  // section markers
    if (!item.parents.empty() && item.parents.front() != sub.get_name()) continue;
    std::string flag = "--" + item.name;
    std::replace(flag.begin() + 2, flag.end(), '_', '-');
    CLI::Option* opt = sub.get_option_no_throw(flag);
    if (opt == nullptr || flag == "--config") {
      throw Error(ErrorCode::ConfigError, "unknown key '" + item.fullname() + "' in " + path);
    }
    if (opt->count() > 0) continue;
    for (const auto& v : item.inputs) opt->add_result(v);
    opt->run_callback();
  }
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Speculative decoding engine: trace generation, runs, sweeps and ablations", "specdec"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default();

  auto* gen = app.add_subcommand("gen-trace", "Write a paired target/draft trace and a manifest");
  add_model_options(*gen, o);
  gen->add_option("--out", o.out, "Output prefix")->required();

  auto* run = app.add_subcommand("run", "Decode with each strategy and emit CSV rows");
  add_run_options(*run, o);
  run->add_option("--strategies", o.strategies, "Comma list: ar,baseline,asp,asp_recycle,tsp");
  run->add_option("--out", o.out, "CSV path ('-' for stdout)");

  auto* sweep = app.add_subcommand("sweep", "Sweep one variable over a grid");
  add_run_options(*sweep, o);
  sweep->add_option("--strategies", o.strategies, "Comma list (default: asp)");
  sweep->add_option("--var", o.var, "tau, draft_len, p_top1 or cost_ratio")
      ->check(CLI::IsMember({"tau", "draft_len", "p_top1", "cost_ratio"}));
  sweep->add_option("--grid", o.grid, "Comma-separated values")->required();
  sweep->add_option("--out", o.out, "CSV path ('-' for stdout)");

  auto* ablate = app.add_subcommand("ablate", "Run the full ladder: ar, baseline, asp, asp_recycle, tsp");
  add_run_options(*ablate, o);
  ablate->add_option("--out", o.out, "CSV path ('-' for stdout)");

  std::string config_path;
  for (auto* sub : {gen, run, sweep, ablate}) {
    sub->add_option("--config", config_path, "Read options from an INI/TOML file; flags win");
  }

  try {
    o.seed = default_seed();
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    if (!config_path.empty()) {
      for (auto* sub : {gen, run, sweep, ablate}) {
        if (sub->parsed()) apply_config_file(*sub, config_path);
      }
    }
    for (auto* sub : {run, sweep, ablate}) {
      if (sub->parsed() && sub->count("--len") > 0) o.len_given = true;
    }

    if (gen->parsed()) {
      cmd_gen_trace(o);
      return kExitOk;
    }
    check_options(o);
    const std::vector<StrategyKind> ladder = {StrategyKind::Autoregressive, StrategyKind::BaselineSpec,
                                              StrategyKind::Asp, StrategyKind::AspRecycle,
                                              StrategyKind::Tsp};
    Experiment ex;
    if (run->parsed()) {
      ex.strategies = parse_strategies(o.strategies, ladder);
      ex.grid.push_back({0.0, o, cost_preset(o.cost_preset)});
    } else if (sweep->parsed()) {
      ex.strategies = parse_strategies(o.strategies, {StrategyKind::Asp});
      for (double v : parse_grid(o.grid)) ex.grid.push_back(grid_point(o, o.var, v));
    } else {
      ex.strategies = ladder;
      ex.grid.push_back({0.0, o, cost_preset(o.cost_preset)});
    }
    run_experiment(ex, o.repeats);
    write_outputs(ex, o, out);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == ErrorCode::TranscriptMismatch ? kExitMismatch : kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace specdec::cli
