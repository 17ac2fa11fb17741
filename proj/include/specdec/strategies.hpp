#pragma once

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

#include "specdec/core.hpp"
#include "specdec/metrics.hpp"
#include "specdec/models.hpp"

namespace specdec {

enum class StrategyKind { Autoregressive, BaselineSpec, Asp, AspRecycle, Tsp };

std::string_view to_string(StrategyKind kind) noexcept;
/// Accepts "ar", "baseline", "asp", "asp_recycle", "tsp". Throws ConfigError.
StrategyKind parse_strategy(std::string_view name);

struct StrategyConfig {
  StrategyKind kind = StrategyKind::Autoregressive;
  std::size_t draft_len = 8;       // fixed draft length of the baseline
  std::size_t max_draft_len = 24;  // cap for adaptive and sparse-tree drafting
  double tau = 0.4;                // threshold on the draft's top-1 probability
  std::size_t branch_k = 2;        // rank of the candidate that seeds a branch
  std::size_t max_branches = 4;
  std::size_t merge_window = 1;
  std::size_t max_output_len = 200;
  TokenId eos = kEosToken;
  std::size_t max_tree_nodes = kDefaultMaxTreeNodes;
  bool bonus_token = true;
  bool free_retention = false;  // charge parallel regeneration at width 1

  /// Throws ConfigError. `model_top_k` bounds branch_k.
  void validate(std::size_t model_top_k) const;
};

struct DecodeResult {
  Sequence output;  // prompt followed by the generated tokens
  RunMetrics metrics;
};

/// A drafted token with the distribution it was drawn from.
struct DraftedToken {
  TokenId token = 0;
  double prob = 0.0;
  Distribution dist;
  bool adopted = false;  // reused from an earlier draft through a graft
};

/// Draft material left over from the previous round.
///
/// `stale` is the old draft past its first rejected token; it was generated
/// after a token the target rejected, so it may no longer line up with the
/// corrected prefix. `stale_context` is the full context ending at the last
/// stale token (or at the rejected token when `stale` is empty).
struct RecycleState {
  std::vector<DraftedToken> stale;
  std::vector<TokenId> stale_context;
  bool extendable = false;

  bool usable() const noexcept { return !stale.empty() || extendable; }
};

struct RecycleResult {
  DraftTree tree;                  // retained branch (trunk) + regeneration (regen)
  std::vector<DraftedToken> path;  // draft to submit for verification
  std::size_t steps_saved = 0;     // adopted tokens kept in `path`
  bool grafted = false;
  bool stopped = false;  // path ends on eos or, when truncating, a low-confidence token
};

/// One regeneration phase: extends the retained stale branch and regenerates
/// from `context` in the same draft forward, grafting the regeneration onto
/// the retained branch at the first token match within merge_window. `limit`
/// caps the submitted draft; `truncate` applies the tau cutoff.
RecycleResult recycle_round(ModelSession& draft, const RecycleState& state,
                            std::span<const TokenId> context, const StrategyConfig& cfg,
                            std::size_t limit, bool truncate);

/// Low-confidence trunk position recorded during sparse-tree drafting.
struct UncertaintyMark {
  std::size_t position = 0;
  std::vector<TokenProb> candidates;  // draft top-k without the emitted token
  NodeId source_node = kNoNode;
  double top_prob = 0.0;
};

struct SparseTreeRound {
  DraftTree tree;                   // trunk + branches, alias edges for grafts
  std::vector<DraftedToken> info;   // per tree node
  std::vector<UncertaintyMark> marks;  // in the order branches were spawned
  std::size_t trunk_len = 0;
  std::size_t steps_saved = 0;
  std::size_t branches = 0;
};

/// Both drafting passes of one sparse-tree round: the trunk (recycling
/// `state` when usable), then rank-`branch_k` branches at up to
/// `max_branches` marks, most uncertain first, extended in parallel until
/// they graft, emit eos, or run out of node budget.
SparseTreeRound build_sparse_tree(ModelSession& draft, std::span<const TokenId> context,
                                  const StrategyConfig& cfg, std::size_t limit,
                                  const RecycleState& state);

/// Target-only greedy decoding; the reference transcript for everything else.
DecodeResult decode_autoregressive(const TokenModel& target, const Sequence& prompt,
                                   const StrategyConfig& cfg);

DecodeResult decode_baseline_spec(const TokenModel& draft, const TokenModel& target,
                                  const Sequence& prompt, const StrategyConfig& cfg);

/// Adaptive drafting; recycles rejected drafts when cfg.kind is AspRecycle.
DecodeResult decode_asp(const TokenModel& draft, const TokenModel& target, const Sequence& prompt,
                        const StrategyConfig& cfg);

DecodeResult decode_tsp(const TokenModel& draft, const TokenModel& target, const Sequence& prompt,
                        const StrategyConfig& cfg);

/// Dispatches on cfg.kind.
DecodeResult decode(const ModelPair& models, const Sequence& prompt, const StrategyConfig& cfg);

}  // namespace specdec
