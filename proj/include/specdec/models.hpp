#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "specdec/core.hpp"

namespace specdec {

enum class ModelKind { SyntheticTarget, SyntheticDraft, Trace };

/// How closely a synthetic draft follows its target.
///
/// Disagreements come in bursts: positions form a two-state agree/disagree
/// Markov chain whose stationary agree share is `p_top1` and whose mean
/// disagree run is `burst_len`. When that pair is infeasible (the chain would
/// need a leave-agree probability above one) the burst length is stretched
/// instead; see `effective_burst_len`.
struct AgreementProfile {
  double p_top1 = 0.9;
  double p_top2 = 0.7;  // target token is the draft's rank 2, given a top-1 miss
  double burst_len = 2.0;

  /// Throws ConfigError when out of range.
  void validate() const;
  double effective_burst_len() const;
};

/// Token model interface. `distribution` is a pure function of the context;
/// forward-pass accounting lives in ModelSession.
class TokenModel {
 public:
  virtual ~TokenModel() = default;

  virtual ModelKind kind() const noexcept = 0;
  virtual std::size_t vocab_size() const noexcept = 0;
  virtual std::size_t top_k() const noexcept = 0;
  virtual Distribution distribution(std::span<const TokenId> context) const = 0;
};

struct SyntheticParams {
  std::size_t vocab_size = 256;
  std::uint64_t seed = 0;
  std::size_t top_k = 4;
  std::size_t horizon = 8192;  // longest context the model answers for
  std::optional<std::size_t> eos_position;  // reference slot that holds kEosToken
  double p_skip = 0.25;  // share of draft misses that jump one reference token ahead

  void validate() const;
};

/// Shared "utterance" both synthetic models are conditioned on: a seeded
/// reference token stream plus the draft's agree/disagree state per slot.
class ReferenceTrack {
 public:
  ReferenceTrack(const SyntheticParams& params, const AgreementProfile& agreement);

  TokenId token(std::size_t slot) const;
  bool draft_agrees(std::size_t slot) const;
  std::size_t horizon() const noexcept { return states_.size(); }

  /// Reference slot the next token should come from, given a context. Each
  /// context token either matches the current slot, matches the next one
  /// (a skipped token), or substitutes the current one.
  std::size_t align(std::span<const TokenId> context) const;

 private:
  std::vector<TokenId> tokens_;
  std::vector<bool> states_;
};

/// Seeded target: its argmax follows the reference track, the head
/// probability is drawn from [0.5, 0.95], and the tail comes from a hashed
/// full-vocabulary score row keyed by (seed, context).
class SyntheticTarget final : public TokenModel {
 public:
  explicit SyntheticTarget(SyntheticParams params);

  ModelKind kind() const noexcept override { return ModelKind::SyntheticTarget; }
  std::size_t vocab_size() const noexcept override { return params_.vocab_size; }
  std::size_t top_k() const noexcept override { return params_.top_k; }
  Distribution distribution(std::span<const TokenId> context) const override;

  const SyntheticParams& params() const noexcept { return params_; }
  const ReferenceTrack& track() const noexcept { return track_; }

 private:
  SyntheticParams params_;
  ReferenceTrack track_;
};

/// Draft paired with a SyntheticTarget through the target's params (and so
/// its seed). In agree slots its argmax is the target's; in disagree slots it
/// emits another token with a lower head probability and places the target's
/// token at rank 2 with probability p_top2.
class SyntheticDraft final : public TokenModel {
 public:
  SyntheticDraft(SyntheticParams target_params, AgreementProfile agreement);

  ModelKind kind() const noexcept override { return ModelKind::SyntheticDraft; }
  std::size_t vocab_size() const noexcept override { return params_.vocab_size; }
  std::size_t top_k() const noexcept override { return params_.top_k; }
  Distribution distribution(std::span<const TokenId> context) const override;

  const AgreementProfile& agreement() const noexcept { return agreement_; }
  const ReferenceTrack& track() const noexcept { return track_; }

 private:
  SyntheticParams params_;
  AgreementProfile agreement_;
  ReferenceTrack track_;
};

/// Replays recorded top-k distributions along one committed token path.
/// Contexts that leave the path raise TraceDiverged; contexts past the last
/// record raise TraceExhausted.
class TraceModel final : public TokenModel {
 public:
  TraceModel(std::vector<Distribution> records, std::vector<TokenId> path, std::size_t vocab_size);

  ModelKind kind() const noexcept override { return ModelKind::Trace; }
  std::size_t vocab_size() const noexcept override { return vocab_size_; }
  std::size_t top_k() const noexcept override;
  Distribution distribution(std::span<const TokenId> context) const override;

  std::span<const Distribution> records() const noexcept { return records_; }
  std::span<const TokenId> path() const noexcept { return path_; }
  /// Argmax of the final record.
  TokenId eos() const;

 private:
  std::vector<Distribution> records_;
  std::vector<TokenId> path_;
  std::size_t vocab_size_;
};

struct ModelPair {
  std::shared_ptr<const TokenModel> target;
  std::shared_ptr<const TokenModel> draft;
};

ModelPair make_synthetic_pair(const SyntheticParams& params, const AgreementProfile& agreement);

// ---- trace files ----------------------------------------------------------

/// One JSON object per line: {"position":p,"topk":[[token,prob],...]}.
void write_trace(const std::filesystem::path& path, std::span<const Distribution> records);
std::vector<Distribution> read_trace_records(const std::filesystem::path& path);

/// Trace replayed along its own argmax path. `vocab_size` defaults to the
/// largest recorded token + 1 (at least 4).
std::shared_ptr<const TraceModel> load_trace(const std::filesystem::path& path,
                                             std::optional<std::size_t> vocab_size = std::nullopt);

/// Target trace plus a draft trace replayed along the target's path.
ModelPair load_trace_pair(const std::filesystem::path& target_path,
                          const std::filesystem::path& draft_path,
                          std::optional<std::size_t> vocab_size = std::nullopt);

// ---- forward accounting ---------------------------------------------------

struct ForwardCounter {
  std::size_t calls = 0;
  std::size_t tokens = 0;  // sum of batch widths

  void charge(std::size_t width) {
    ++calls;
    tokens += width;
  }
};

/// Per-decoding-session view of a shared model that counts forward passes.
class ModelSession {
 public:
  explicit ModelSession(const TokenModel& model) : model_(&model) {}

  const TokenModel& model() const noexcept { return *model_; }
  const ForwardCounter& counter() const noexcept { return counter_; }

  /// One forward of width 1.
  Distribution next_distribution(std::span<const TokenId> prefix);

  /// One forward of width `tree.size()`; entry i is the distribution after
  /// `committed` followed by the tokens visible to node i under `mask`.
  std::vector<Distribution> batch_distributions(const DraftTree& tree, const AttentionMask& mask,
                                                std::span<const TokenId> committed);

  /// One forward over arbitrary contexts, charged at `width` (defaults to
  /// the number of contexts).
  std::vector<Distribution> batch(std::span<const std::vector<TokenId>> contexts,
                                  std::optional<std::size_t> width = std::nullopt);

  /// Records a forward whose outputs the caller evaluates lazily.
  void charge(std::size_t width) { counter_.charge(width); }

 private:
  const TokenModel* model_;
  ForwardCounter counter_;
};

}  // namespace specdec
