#pragma once

// Vocabulary-row kernels used by the synthetic token models.
//
// A synthetic model scores every vocabulary entry with a keyed integer hash and
// keeps the k best entries, the way an LM head produces logits and a sampler
// takes the top-k. The kernels are integer-only, so the scalar reference and
// the SIMD variants agree bit-for-bit; the dispatcher picks the widest one
// the CPU supports at runtime.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "specdec/core.hpp"

namespace specdec::kernels {

enum class Backend { Scalar, Avx2, Neon };

std::string_view name(Backend backend) noexcept;
bool supported(Backend backend) noexcept;

/// Best supported backend, unless SPECDEC_KERNEL=scalar|avx2|neon says otherwise.
Backend active_backend() noexcept;

/// Overrides the dispatch choice; throws ConfigError for unsupported backends.
void set_backend(Backend backend);

struct ScoredToken {
  std::uint32_t score = 0;
  TokenId token = 0;

  friend bool operator==(const ScoredToken&, const ScoredToken&) = default;
};

inline constexpr std::uint32_t kTokenStride = 0x9E3779B9u;

/// Integer finalizer shared by every backend.
constexpr std::uint32_t mix32(std::uint32_t x) noexcept {
  x ^= x >> 16;
  x *= 0x7feb352du;
  x ^= x >> 15;
  x *= 0x846ca68bu;
  x ^= x >> 16;
  return x;
}

constexpr std::uint32_t token_score(std::uint32_t key, TokenId token) noexcept {
  return mix32(key ^ (token * kTokenStride));
}

/// scores[i] = token_score(key, first + i).
void hashed_scores(std::uint32_t key, TokenId first, std::span<std::uint32_t> scores);

/// The k highest-scoring tokens in [first, first + count), best first; equal
/// scores keep the lower token id first.
std::vector<ScoredToken> top_k_hashed(std::uint32_t key, TokenId first, std::size_t count,
                                      std::size_t k);

// Per-backend entry points, exposed for equivalence tests and benchmarks.
namespace scalar {
void hashed_scores(std::uint32_t key, TokenId first, std::span<std::uint32_t> scores);
std::vector<ScoredToken> top_k_hashed(std::uint32_t key, TokenId first, std::size_t count,
                                      std::size_t k);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
void hashed_scores(std::uint32_t key, TokenId first, std::span<std::uint32_t> scores);
std::vector<ScoredToken> top_k_hashed(std::uint32_t key, TokenId first, std::size_t count,
                                      std::size_t k);
}  // namespace avx2
#endif

#if defined(__aarch64__)
namespace neon {
void hashed_scores(std::uint32_t key, TokenId first, std::span<std::uint32_t> scores);
std::vector<ScoredToken> top_k_hashed(std::uint32_t key, TokenId first, std::size_t count,
                                      std::size_t k);
}  // namespace neon
#endif

}  // namespace specdec::kernels
