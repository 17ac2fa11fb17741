#include <algorithm>

#include "common.hpp"

namespace specdec {

using detail::DecodeState;
using detail::DraftStop;

namespace {

void check_config(const TokenModel& draft, const StrategyConfig& cfg) {
  cfg.validate(draft.top_k());
}

// Rank of the target's token in the draft distribution at the first miss.
void record_miss(RunMetrics& m, std::span<const DraftedToken> path,
                 const VerificationOutcome& outcome) {
  const std::size_t i = outcome.accepted.size();
  if (outcome.fully_accepted || i >= path.size() || path[i].adopted) return;
  m.record_miss_rank(path[i].dist.rank_of(outcome.correction).value_or(0));
}

}  // namespace

DecodeResult decode_autoregressive(const TokenModel& target, const Sequence& prompt,
                                   const StrategyConfig& cfg) {
  if (cfg.max_output_len == 0) throw Error(ErrorCode::ConfigError, "max_output_len must be >= 1");
  ModelSession session(target);
  DecodeState state(prompt, cfg);
  while (!state.finished()) state.target_step(session);
  return std::move(state).finish(nullptr, session);
}

DecodeResult decode_baseline_spec(const TokenModel& draft, const TokenModel& target,
                                  const Sequence& prompt, const StrategyConfig& cfg) {
  check_config(draft, cfg);
  ModelSession ds(draft), ts(target);
  DecodeState state(prompt, cfg);
  while (!state.finished()) {
    const std::size_t limit = std::min(cfg.draft_len, state.remaining() - 1);
    std::vector<DraftedToken> path;
    if (limit > 0) detail::extend_linear(ds, state.context(), path, limit, cfg, false);
    if (path.empty()) {
      state.target_step(ts);
      continue;
    }
    const auto outcome = verify_linear(ts, state.context(), detail::tokens_of(path));
    state.metrics().submitted_tokens += path.size();
    record_miss(state.metrics(), path, outcome);
    state.commit(outcome);
  }
  return std::move(state).finish(&ds, ts);
}

DecodeResult decode_asp(const TokenModel& draft, const TokenModel& target, const Sequence& prompt,
                        const StrategyConfig& cfg) {
  check_config(draft, cfg);
  const bool recycle = cfg.kind == StrategyKind::AspRecycle;
  ModelSession ds(draft), ts(target);
  DecodeState state(prompt, cfg);
  RecycleState carry;
  while (!state.finished()) {
    const std::size_t limit = std::min(cfg.max_draft_len, state.remaining() - 1);
    std::vector<DraftedToken> path;
    DraftStop stop = DraftStop::Limit;
    bool stopped = false;
    if (limit > 0 && recycle && carry.usable()) {
      auto r = recycle_round(ds, carry, state.context(), cfg, limit, true);
      path = std::move(r.path);
      state.metrics().draft_steps_saved += r.steps_saved;
      stopped = r.stopped;
    }
    if (limit > 0 && !stopped && path.size() < limit) {
      stop = detail::extend_linear(ds, state.context(), path, limit, cfg, true);
    }
    carry = {};
    if (path.empty()) {
      state.target_step(ts);
      continue;
    }
    if (path.back().prob < cfg.tau && path.back().token != cfg.eos) ++state.metrics().truncations;

    std::vector<TokenId> drafted_context(state.context().begin(), state.context().end());
    const auto tokens = detail::tokens_of(path);
    const auto outcome = verify_linear(ts, state.context(), tokens);
    state.metrics().submitted_tokens += path.size();
    for (std::size_t i = 0; i < outcome.accepted.size(); ++i) {
      if (path[i].adopted) ++state.metrics().grafted_committed;
    }
    record_miss(state.metrics(), path, outcome);
    state.commit(outcome);

    if (recycle && !outcome.fully_accepted) {
      const std::size_t a = outcome.accepted.size();
      carry.stale.assign(path.begin() + static_cast<std::ptrdiff_t>(a) + 1, path.end());
      carry.stale_context = std::move(drafted_context);
      carry.stale_context.insert(carry.stale_context.end(), tokens.begin(), tokens.end());
      carry.extendable = stop != DraftStop::Unavailable &&
                         !detail::stops_draft(path.back(), cfg, true);
    }
  }
  return std::move(state).finish(&ds, ts);
}

}  // namespace specdec
