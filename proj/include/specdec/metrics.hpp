#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "specdec/core.hpp"

namespace specdec {

/// Event counters for one decoding session.
///
/// With the bonus token enabled every round commits its accepted draft tokens
/// plus one correction or bonus token, so
/// committed_tokens == sum(accepted_per_round) + rounds. A round that ends on
/// an accepted end-of-sequence token counts that token as its terminal one.
struct RunMetrics {
  std::size_t draft_calls = 0;
  std::size_t draft_tokens = 0;
  std::size_t target_calls = 0;
  std::size_t target_tokens = 0;
  std::size_t committed_tokens = 0;
  std::vector<std::size_t> accepted_per_round;
  std::size_t draft_steps_saved = 0;
  std::size_t rounds = 0;
  std::size_t truncations = 0;
  std::size_t marks_spawned = 0;

  std::size_t submitted_tokens = 0;   // draft tokens sent to verification
  std::size_t grafted_committed = 0;  // committed tokens that came from grafted drafts
  // Rank of the target's token in the draft distribution where a draft top-1
  // was rejected; index 0 counts "outside the top-k".
  std::vector<std::size_t> miss_rank;

  std::uint64_t transcript_digest = 0;
  std::size_t transcript_len = 0;

  std::size_t accepted_total() const noexcept;
  /// Drafted tokens that verification threw away.
  std::size_t ineffective_tokens() const noexcept;
  void record_miss_rank(std::size_t rank);
};

std::uint64_t transcript_digest(std::span<const TokenId> tokens) noexcept;

/// Affine per-forward cost: base per call plus per token in the batch.
struct CostModel {
  double draft_base = 0.0;
  double draft_per_token = 0.0;
  double target_base = 0.0;
  double target_per_token = 0.0;

  void validate() const;
};

/// "8to1" (small-vs-medium regime) or "30to1" (much larger target).
CostModel cost_preset(std::string_view name);

struct LatencyBreakdown {
  double draft = 0.0;
  double target = 0.0;
  double total = 0.0;
};

LatencyBreakdown simulated_latency(const RunMetrics& m, const CostModel& c);

/// reference latency / method latency. Throws TranscriptMismatch when the
/// two runs emitted different transcripts.
double speedup(const RunMetrics& method, const RunMetrics& reference, const CostModel& c);

struct SummaryRow {
  std::size_t runs = 0;
  double mean_accept = 0.0;   // accepted draft tokens per verification round
  double accept_ratio = 0.0;  // accepted / submitted draft tokens
  double draft_steps = 0.0;   // mean draft forward calls per run
  double target_rounds = 0.0; // mean target forward calls per run
  double reuse_frac = 0.0;    // committed tokens obtained through grafts
  double ineffective_steps = 0.0;  // mean drafted-but-rejected tokens per run
};

/// Throws ConfigError on an empty list.
SummaryRow summarize(std::span<const RunMetrics> runs);

// ---- CSV --------------------------------------------------------------------

std::string_view csv_header();

struct CsvRow {
  std::string strategy;
  std::uint64_t seed = 0;
  double p_top1 = 0.0;
  double p_top2 = 0.0;
  double tau = 0.0;
  std::size_t draft_len = 0;
  RunMetrics metrics;
  LatencyBreakdown latency;
  double speedup_vs_ar = 1.0;
};

std::string format_csv_row(const CsvRow& row);

}  // namespace specdec
