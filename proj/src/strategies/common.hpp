#pragma once

#include <optional>
#include <span>
#include <vector>

#include "specdec/strategies.hpp"
#include "specdec/verify.hpp"

namespace specdec::detail {

/// Running transcript plus counters for one decoding session.
class DecodeState {
 public:
  DecodeState(const Sequence& prompt, const StrategyConfig& cfg);

  std::span<const TokenId> context() const noexcept { return context_; }
  std::size_t generated() const noexcept { return context_.size() - prompt_len_; }
  std::size_t remaining() const noexcept { return cfg_->max_output_len - generated(); }
  bool finished() const noexcept { return finished_; }
  RunMetrics& metrics() noexcept { return metrics_; }

  /// Commits accepted tokens and, unless an accepted eos ended decoding or
  /// the bonus is disabled on full acceptance, the correction.
  void commit(const VerificationOutcome& outcome);

  /// Round without a draft: one width-1 target forward.
  void target_step(ModelSession& target);

  DecodeResult finish(const ModelSession* draft, const ModelSession& target) &&;

 private:
  const StrategyConfig* cfg_;
  std::vector<TokenId> context_;
  std::size_t prompt_len_;
  std::size_t base_position_;
  bool finished_ = false;
  RunMetrics metrics_;
};

enum class DraftStop { Limit, Eos, Truncated, Unavailable };

/// Distribution for `context`, or nullopt when a trace model cannot answer.
std::optional<Distribution> try_distribution(const TokenModel& model,
                                             std::span<const TokenId> context);

/// Greedy single-sequence drafting after `context ++ path` until `limit`
/// tokens, eos, or (with `truncate`) a top-1 probability below tau.
DraftStop extend_linear(ModelSession& draft, std::span<const TokenId> context,
                        std::vector<DraftedToken>& path, std::size_t limit,
                        const StrategyConfig& cfg, bool truncate);

std::vector<TokenId> tokens_of(std::span<const DraftedToken> path);

bool stops_draft(const DraftedToken& t, const StrategyConfig& cfg, bool truncate);

}  // namespace specdec::detail
