#include "common.hpp"

namespace specdec::detail {

DecodeState::DecodeState(const Sequence& prompt, const StrategyConfig& cfg)
    : cfg_(&cfg),
      context_(prompt.tokens),
      prompt_len_(prompt.size()),
      base_position_(prompt.base_position) {
  finished_ = cfg.max_output_len == 0;
}

void DecodeState::commit(const VerificationOutcome& outcome) {
  std::size_t accepted = 0;
  bool hit_eos = false;
  for (TokenId t : outcome.accepted) {
    context_.push_back(t);
    ++accepted;
    if (t == cfg_->eos) {
      hit_eos = true;
      break;
    }
  }
  metrics_.committed_tokens += accepted;
  if (hit_eos) {
    // The accepted eos closes the round in place of a correction.
    metrics_.accepted_per_round.push_back(accepted - 1);
    finished_ = true;
  } else {
    metrics_.accepted_per_round.push_back(accepted);
    if (!outcome.fully_accepted || cfg_->bonus_token) {
      context_.push_back(outcome.correction);
      ++metrics_.committed_tokens;
      if (outcome.correction == cfg_->eos) finished_ = true;
    }
  }
  ++metrics_.rounds;
  if (generated() >= cfg_->max_output_len) finished_ = true;
}

void DecodeState::target_step(ModelSession& target) {
  VerificationOutcome step;
  step.correction = target.next_distribution(context_).argmax();
  commit(step);
}

DecodeResult DecodeState::finish(const ModelSession* draft, const ModelSession& target) && {
  if (draft != nullptr) {
    metrics_.draft_calls = draft->counter().calls;
    metrics_.draft_tokens = draft->counter().tokens;
  }
  metrics_.target_calls = target.counter().calls;
  metrics_.target_tokens = target.counter().tokens;
  metrics_.transcript_digest = transcript_digest(context_);
  metrics_.transcript_len = context_.size();
  DecodeResult out;
  out.output.tokens = std::move(context_);
  out.output.base_position = base_position_;
  out.metrics = std::move(metrics_);
  return out;
}

std::optional<Distribution> try_distribution(const TokenModel& model,
                                             std::span<const TokenId> context) {
  try {
    return model.distribution(context);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::TraceDiverged || e.code() == ErrorCode::TraceExhausted) {
      return std::nullopt;
    }
    throw;
  }
}

bool stops_draft(const DraftedToken& t, const StrategyConfig& cfg, bool truncate) {
  return t.token == cfg.eos || (truncate && t.prob < cfg.tau);
}

DraftStop extend_linear(ModelSession& draft, std::span<const TokenId> context,
                        std::vector<DraftedToken>& path, std::size_t limit,
                        const StrategyConfig& cfg, bool truncate) {
  std::vector<TokenId> ctx(context.begin(), context.end());
  for (const auto& t : path) ctx.push_back(t.token);
  while (path.size() < limit) {
    auto dist = try_distribution(draft.model(), ctx);
    if (!dist) return DraftStop::Unavailable;
    draft.charge(1);
    DraftedToken t{dist->argmax(), dist->top_prob(), std::move(*dist), false};
    path.push_back(t);
    ctx.push_back(t.token);
    if (t.token == cfg.eos) return DraftStop::Eos;
    if (truncate && t.prob < cfg.tau) return DraftStop::Truncated;
  }
  return DraftStop::Limit;
}

std::vector<TokenId> tokens_of(std::span<const DraftedToken> path) {
  std::vector<TokenId> out;
  out.reserve(path.size());
  for (const auto& t : path) out.push_back(t.token);
  return out;
}

}  // namespace specdec::detail
