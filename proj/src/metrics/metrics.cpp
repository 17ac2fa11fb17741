#include <cstdio>
#include <limits>
#include <numeric>
#include <string>

#include "specdec/metrics.hpp"

namespace specdec {

std::size_t RunMetrics::accepted_total() const noexcept {
  return std::accumulate(accepted_per_round.begin(), accepted_per_round.end(), std::size_t{0});
}

std::size_t RunMetrics::ineffective_tokens() const noexcept {
  const std::size_t accepted = accepted_total();
  return submitted_tokens > accepted ? submitted_tokens - accepted : 0;
}

void RunMetrics::record_miss_rank(std::size_t rank) {
  if (miss_rank.size() <= rank) miss_rank.resize(rank + 1, 0);
  ++miss_rank[rank];
}

std::uint64_t transcript_digest(std::span<const TokenId> tokens) noexcept {
  // FNV-1a over the little-endian token bytes.
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (TokenId t : tokens) {
    for (int b = 0; b < 4; ++b) {
      h ^= (t >> (8 * b)) & 0xffu;
      h *= 0x100000001b3ull;
    }
  }
  return h;
}

void CostModel::validate() const {
  if (draft_base < 0 || draft_per_token < 0 || target_base < 0 || target_per_token < 0) {
    throw Error(ErrorCode::ConfigError, "cost model fields must be non-negative");
  }
}

CostModel cost_preset(std::string_view name) {
  // Per-call cost dominates per-token cost: single-token decoding is
  // memory-bound, so a wider batch adds little on top of the weight load.
  if (name == "8to1") return CostModel{1.0, 0.05, 8.0, 0.4};
  if (name == "30to1") return CostModel{1.0, 0.05, 30.0, 0.3};
  throw Error(ErrorCode::ConfigError, "unknown cost preset '" + std::string(name) + "'");
}

LatencyBreakdown simulated_latency(const RunMetrics& m, const CostModel& c) {
  LatencyBreakdown out;
  out.draft = static_cast<double>(m.draft_calls) * c.draft_base +
              static_cast<double>(m.draft_tokens) * c.draft_per_token;
  out.target = static_cast<double>(m.target_calls) * c.target_base +
               static_cast<double>(m.target_tokens) * c.target_per_token;
  out.total = out.draft + out.target;
  return out;
}

double speedup(const RunMetrics& method, const RunMetrics& reference, const CostModel& c) {
  if (method.transcript_digest != reference.transcript_digest ||
      method.transcript_len != reference.transcript_len) {
    throw Error(ErrorCode::TranscriptMismatch, "runs decoded different transcripts");
  }
  const double ref = simulated_latency(reference, c).total;
  const double own = simulated_latency(method, c).total;
  if (own == 0.0) return ref == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
  return ref / own;
}

SummaryRow summarize(std::span<const RunMetrics> runs) {
  if (runs.empty()) throw Error(ErrorCode::ConfigError, "nothing to summarize");
  SummaryRow row;
  row.runs = runs.size();
  double accepted = 0, rounds = 0, submitted = 0, draft = 0, target = 0, committed = 0, grafted = 0,
         wasted = 0;
  for (const auto& m : runs) {
    accepted += static_cast<double>(m.accepted_total());
    rounds += static_cast<double>(m.accepted_per_round.size());
    submitted += static_cast<double>(m.submitted_tokens);
    draft += static_cast<double>(m.draft_calls);
    target += static_cast<double>(m.target_calls);
    committed += static_cast<double>(m.committed_tokens);
    grafted += static_cast<double>(m.grafted_committed);
    wasted += static_cast<double>(m.ineffective_tokens());
  }
  const double n = static_cast<double>(runs.size());
  row.mean_accept = rounds > 0 ? accepted / rounds : 0.0;
  row.accept_ratio = submitted > 0 ? accepted / submitted : 0.0;
  row.draft_steps = draft / n;
  row.target_rounds = target / n;
  row.reuse_frac = committed > 0 ? grafted / committed : 0.0;
  row.ineffective_steps = wasted / n;
  return row;
}

std::string_view csv_header() {
  return "strategy,seed,p_top1,p_top2,tau,draft_len,rounds,draft_calls,draft_tokens,target_calls,"
         "target_tokens,committed,accept_ratio,mean_accept,reuse_frac,sim_latency_draft,"
         "sim_latency_target,sim_latency_total,speedup_vs_ar";
}

std::string format_csv_row(const CsvRow& row) {
  const RunMetrics one[] = {row.metrics};
  const SummaryRow s = summarize(one);
  char buf[512];
  std::snprintf(buf, sizeof buf,
                "%s,%llu,%.4f,%.4f,%.4f,%zu,%zu,%zu,%zu,%zu,%zu,%zu,%.6f,%.6f,%.6f,%.4f,%.4f,%.4f,%.6f",
                row.strategy.c_str(), static_cast<unsigned long long>(row.seed), row.p_top1,
                row.p_top2, row.tau, row.draft_len, row.metrics.rounds, row.metrics.draft_calls,
                row.metrics.draft_tokens, row.metrics.target_calls, row.metrics.target_tokens,
                row.metrics.committed_tokens, s.accept_ratio, s.mean_accept, s.reuse_frac,
                row.latency.draft, row.latency.target, row.latency.total, row.speedup_vs_ar);
  return buf;
}

}  // namespace specdec
