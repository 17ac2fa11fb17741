#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include "specdec/kernels.hpp"
#include "topk_insert.hpp"

namespace specdec::kernels::avx2 {

namespace {

__attribute__((target("avx2"))) inline __m256i mix32_x8(__m256i x) {
  x = _mm256_xor_si256(x, _mm256_srli_epi32(x, 16));
  x = _mm256_mullo_epi32(x, _mm256_set1_epi32(static_cast<int>(0x7feb352du)));
  x = _mm256_xor_si256(x, _mm256_srli_epi32(x, 15));
  x = _mm256_mullo_epi32(x, _mm256_set1_epi32(static_cast<int>(0x846ca68bu)));
  x = _mm256_xor_si256(x, _mm256_srli_epi32(x, 16));
  return x;
}

__attribute__((target("avx2"))) inline __m256i scores_x8(__m256i key, __m256i tokens) {
  const __m256i stride = _mm256_set1_epi32(static_cast<int>(kTokenStride));
  return mix32_x8(_mm256_xor_si256(key, _mm256_mullo_epi32(tokens, stride)));
}

__attribute__((target("avx2"))) inline __m256i lane_offsets() {
  return _mm256_setr_epi32(0, 1, 2, 3, 4, 5, 6, 7);
}

}  // namespace

__attribute__((target("avx2"))) void hashed_scores(std::uint32_t key, TokenId first,
                                                   std::span<std::uint32_t> scores) {
  const __m256i vkey = _mm256_set1_epi32(static_cast<int>(key));
  __m256i tokens = _mm256_add_epi32(_mm256_set1_epi32(static_cast<int>(first)), lane_offsets());
  const __m256i step = _mm256_set1_epi32(8);
  std::size_t i = 0;
  for (; i + 8 <= scores.size(); i += 8) {
    _mm256_storeu_si256(reinterpret_cast<__m256i*>(scores.data() + i), scores_x8(vkey, tokens));
    tokens = _mm256_add_epi32(tokens, step);
  }
  for (; i < scores.size(); ++i) scores[i] = token_score(key, first + static_cast<TokenId>(i));
}

__attribute__((target("avx2"))) std::vector<ScoredToken> top_k_hashed(std::uint32_t key,
                                                                      TokenId first,
                                                                      std::size_t count,
                                                                      std::size_t k) {
  detail::TopKBuffer best(k);
  const __m256i vkey = _mm256_set1_epi32(static_cast<int>(key));
  // Unsigned compare via sign flip: a >u b  <=>  (a ^ 0x80000000) >s (b ^ 0x80000000).
  const __m256i flip = _mm256_set1_epi32(static_cast<int>(0x80000000u));
  __m256i tokens = _mm256_add_epi32(_mm256_set1_epi32(static_cast<int>(first)), lane_offsets());
  const __m256i step = _mm256_set1_epi32(8);
  alignas(32) std::uint32_t lane[8];
  std::size_t i = 0;
  for (; i + 8 <= count; i += 8) {
    const __m256i s = scores_x8(vkey, tokens);
    tokens = _mm256_add_epi32(tokens, step);
    int hits = 0xff;
    if (best.full()) {
      const __m256i thr = _mm256_set1_epi32(static_cast<int>(best.threshold()));
      const __m256i gt = _mm256_cmpgt_epi32(_mm256_xor_si256(s, flip), _mm256_xor_si256(thr, flip));
      hits = _mm256_movemask_ps(_mm256_castsi256_ps(gt));
      if (hits == 0) continue;
    }
    _mm256_store_si256(reinterpret_cast<__m256i*>(lane), s);
    for (int l = 0; l < 8; ++l) {
      if (hits & (1 << l)) best.offer(lane[l], first + static_cast<TokenId>(i + l));
    }
  }
  for (; i < count; ++i) {
    const TokenId token = first + static_cast<TokenId>(i);
    best.offer(token_score(key, token), token);
  }
  return std::move(best).take();
}

}  // namespace specdec::kernels::avx2

#endif
