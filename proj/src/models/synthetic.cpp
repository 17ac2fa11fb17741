#include <algorithm>
#include <cmath>
#include <string>

#include "specdec/kernels.hpp"
#include "specdec/models.hpp"

namespace specdec {

namespace {

constexpr std::uint64_t kSaltReference = 0x5245464552454e43ull;
constexpr std::uint64_t kSaltChain = 0x434841494e535441ull;
constexpr std::uint64_t kSaltTarget = 0x5441524745544d44ull;
constexpr std::uint64_t kSaltDraft = 0x44524146544d4f44ull;

constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

constexpr double unit(std::uint64_t h) noexcept {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

std::uint64_t context_hash(std::uint64_t seed, std::uint64_t salt,
                           std::span<const TokenId> context) noexcept {
  std::uint64_t h = mix64(seed ^ salt);
  for (TokenId t : context) h = mix64(h ^ t);
  return h;
}

std::uint32_t fold32(std::uint64_t h) noexcept {
  return static_cast<std::uint32_t>(h ^ (h >> 32));
}

// Head probability first; each following entry takes at most 90% of the one
// before and 60% of the mass still unassigned, so the list is strictly
// decreasing and sums below one.
Distribution with_tail_probs(const std::vector<TokenId>& tokens, double head) {
  std::vector<TokenProb> entries;
  entries.reserve(tokens.size());
  double remaining = 1.0 - head;
  double prev = head;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    double p = head;
    if (i > 0) {
      p = std::min(0.9 * prev, 0.6 * remaining);
      remaining -= p;
    }
    entries.push_back({tokens[i], p});
    prev = p;
  }
  return Distribution(std::move(entries));
}

std::vector<TokenId> tail_candidates(std::uint64_t h, std::size_t vocab, std::size_t want,
                                     std::initializer_list<TokenId> exclude) {
  auto scored = kernels::top_k_hashed(fold32(h), 1, vocab - 1, want + exclude.size());
  std::vector<TokenId> out;
  for (const auto& s : scored) {
    if (std::find(exclude.begin(), exclude.end(), s.token) != exclude.end()) continue;
    if (out.size() == want) break;
    out.push_back(s.token);
  }
  return out;
}

}  // namespace

void AgreementProfile::validate() const {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(p_top1) || !in_unit(p_top2)) {
    throw Error(ErrorCode::ConfigError, "agreement probabilities must lie in [0,1]");
  }
  if (!(burst_len >= 1.0)) throw Error(ErrorCode::ConfigError, "burst_len must be >= 1");
}

double AgreementProfile::effective_burst_len() const {
  if (p_top1 <= 0.0 || p_top1 >= 1.0) return burst_len;
  const double leave_agree = (1.0 - p_top1) / (burst_len * p_top1);
  if (leave_agree <= 1.0) return burst_len;
  return (1.0 - p_top1) / p_top1;
}

void SyntheticParams::validate() const {
  if (vocab_size < 4) throw Error(ErrorCode::ConfigError, "vocab_size must be >= 4");
  if (top_k < 2) throw Error(ErrorCode::ConfigError, "top_k must be >= 2");
  if (horizon == 0) throw Error(ErrorCode::ConfigError, "horizon must be positive");
  if (!(p_skip >= 0.0 && p_skip <= 1.0)) throw Error(ErrorCode::ConfigError, "p_skip must lie in [0,1]");
}

ReferenceTrack::ReferenceTrack(const SyntheticParams& params, const AgreementProfile& agreement) {
  params.validate();
  agreement.validate();
  const std::uint64_t span = params.vocab_size - 1;
  tokens_.resize(params.horizon + 2);
  for (std::size_t j = 0; j < tokens_.size(); ++j) {
    TokenId t = static_cast<TokenId>(1 + mix64(params.seed ^ mix64(j ^ kSaltReference)) % span);
    if (j > 0 && t == tokens_[j - 1]) t = static_cast<TokenId>(1 + t % span);
    tokens_[j] = t;
  }
  if (params.eos_position && *params.eos_position < tokens_.size()) {
    tokens_[*params.eos_position] = kEosToken;
  }

  states_.resize(params.horizon);
  const double p = agreement.p_top1;
  double to_agree = 1.0 / agreement.effective_burst_len();
  double to_disagree = p > 0.0 ? (1.0 - p) * to_agree / p : 1.0;
  to_agree = std::min(to_agree, 1.0);
  to_disagree = std::min(to_disagree, 1.0);
  bool agree = unit(mix64(params.seed ^ kSaltChain)) < p;
  for (std::size_t j = 0; j < states_.size(); ++j) {
    if (j > 0) {
      const double u = unit(mix64(params.seed ^ mix64(j ^ kSaltChain)));
      agree = agree ? u >= to_disagree : u < to_agree;
    }
    if (p >= 1.0) agree = true;
    if (p <= 0.0) agree = false;
    states_[j] = agree;
  }
}

TokenId ReferenceTrack::token(std::size_t slot) const {
  if (slot >= tokens_.size()) {
    throw Error(ErrorCode::ConfigError, "reference slot " + std::to_string(slot) + " beyond horizon");
  }
  return tokens_[slot];
}

bool ReferenceTrack::draft_agrees(std::size_t slot) const {
  if (slot >= states_.size()) {
    throw Error(ErrorCode::ConfigError, "reference slot " + std::to_string(slot) + " beyond horizon");
  }
  return states_[slot];
}

std::size_t ReferenceTrack::align(std::span<const TokenId> context) const {
  std::size_t slot = 0;
  for (TokenId t : context) {
    if (slot + 1 >= tokens_.size()) {
      throw Error(ErrorCode::ConfigError, "context longer than model horizon");
    }
    if (t == tokens_[slot]) {
      slot += 1;
    } else if (t == tokens_[slot + 1]) {
      slot += 2;
    } else {
      slot += 1;
    }
  }
  if (slot >= states_.size()) throw Error(ErrorCode::ConfigError, "context longer than model horizon");
  return slot;
}

SyntheticTarget::SyntheticTarget(SyntheticParams params)
    : params_(params), track_(params, AgreementProfile{1.0, 0.0, 1.0}) {}

Distribution SyntheticTarget::distribution(std::span<const TokenId> context) const {
  const std::size_t slot = track_.align(context);
  const TokenId head = track_.token(slot);
  const std::uint64_t h = context_hash(params_.seed, kSaltTarget, context);
  const double head_prob = 0.5 + 0.45 * unit(mix64(h ^ 1));
  std::vector<TokenId> tokens{head};
  for (TokenId t : tail_candidates(h, params_.vocab_size, params_.top_k - 1, {head})) {
    tokens.push_back(t);
  }
  return with_tail_probs(tokens, head_prob);
}

SyntheticDraft::SyntheticDraft(SyntheticParams target_params, AgreementProfile agreement)
    : params_(target_params), agreement_(agreement), track_(target_params, agreement) {}

Distribution SyntheticDraft::distribution(std::span<const TokenId> context) const {
  const std::size_t slot = track_.align(context);
  const TokenId truth = track_.token(slot);
  const TokenId next = track_.token(slot + 1);
  const std::uint64_t h = context_hash(params_.seed, kSaltDraft, context);
  auto tail = tail_candidates(h, params_.vocab_size, params_.top_k, {truth, next});
  const std::size_t k = params_.top_k;

  std::vector<TokenId> tokens;
  double head_prob = 0.0;
  if (track_.draft_agrees(slot)) {
    head_prob = 0.35 + 0.6 * unit(mix64(h ^ 1));
    tokens.push_back(truth);
    for (TokenId t : tail) tokens.push_back(t);
  } else {
    head_prob = 0.2 + 0.35 * unit(mix64(h ^ 1));
    std::size_t used = 0;
    if (unit(mix64(h ^ 2)) < params_.p_skip && next != truth) {
      tokens.push_back(next);
    } else {
      tokens.push_back(tail[used++]);
    }
    if (unit(mix64(h ^ 3)) < agreement_.p_top2) {
      tokens.push_back(truth);
    } else if (unit(mix64(h ^ 4)) < 0.5 && used < tail.size()) {
      tokens.push_back(tail[used++]);
      tokens.push_back(truth);
    }
    for (; used < tail.size(); ++used) tokens.push_back(tail[used]);
  }
  if (tokens.size() > k) tokens.resize(k);
  return with_tail_probs(tokens, head_prob);
}

ModelPair make_synthetic_pair(const SyntheticParams& params, const AgreementProfile& agreement) {
  return {std::make_shared<SyntheticTarget>(params),
          std::make_shared<SyntheticDraft>(params, agreement)};
}

}  // namespace specdec
