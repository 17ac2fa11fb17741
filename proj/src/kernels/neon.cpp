#if defined(__aarch64__)

#include <arm_neon.h>

#include "specdec/kernels.hpp"
#include "topk_insert.hpp"

namespace specdec::kernels::neon {

namespace {

inline uint32x4_t mix32_x4(uint32x4_t x) {
  x = veorq_u32(x, vshrq_n_u32(x, 16));
  x = vmulq_n_u32(x, 0x7feb352du);
  x = veorq_u32(x, vshrq_n_u32(x, 15));
  x = vmulq_n_u32(x, 0x846ca68bu);
  x = veorq_u32(x, vshrq_n_u32(x, 16));
  return x;
}

inline uint32x4_t scores_x4(uint32x4_t key, uint32x4_t tokens) {
  return mix32_x4(veorq_u32(key, vmulq_n_u32(tokens, kTokenStride)));
}

inline uint32x4_t lane_offsets() {
  static const std::uint32_t kOffsets[4] = {0, 1, 2, 3};
  return vld1q_u32(kOffsets);
}

}  // namespace

void hashed_scores(std::uint32_t key, TokenId first, std::span<std::uint32_t> scores) {
  const uint32x4_t vkey = vdupq_n_u32(key);
  uint32x4_t tokens = vaddq_u32(vdupq_n_u32(first), lane_offsets());
  const uint32x4_t step = vdupq_n_u32(4);
  std::size_t i = 0;
  for (; i + 4 <= scores.size(); i += 4) {
    vst1q_u32(scores.data() + i, scores_x4(vkey, tokens));
    tokens = vaddq_u32(tokens, step);
  }
  for (; i < scores.size(); ++i) scores[i] = token_score(key, first + static_cast<TokenId>(i));
}

std::vector<ScoredToken> top_k_hashed(std::uint32_t key, TokenId first, std::size_t count,
                                      std::size_t k) {
  detail::TopKBuffer best(k);
  const uint32x4_t vkey = vdupq_n_u32(key);
  uint32x4_t tokens = vaddq_u32(vdupq_n_u32(first), lane_offsets());
  const uint32x4_t step = vdupq_n_u32(4);
  std::uint32_t lane[4];
  std::size_t i = 0;
  for (; i + 4 <= count; i += 4) {
    const uint32x4_t s = scores_x4(vkey, tokens);
    tokens = vaddq_u32(tokens, step);
    std::uint32_t gt[4] = {1, 1, 1, 1};
    if (best.full()) {
      const uint32x4_t mask = vcgtq_u32(s, vdupq_n_u32(best.threshold()));
      if (vmaxvq_u32(mask) == 0) continue;
      vst1q_u32(gt, mask);
    }
    vst1q_u32(lane, s);
    for (int l = 0; l < 4; ++l) {
      if (gt[l]) best.offer(lane[l], first + static_cast<TokenId>(i + l));
    }
  }
  for (; i < count; ++i) {
    const TokenId token = first + static_cast<TokenId>(i);
    best.offer(token_score(key, token), token);
  }
  return std::move(best).take();
}

}  // namespace specdec::kernels::neon

#endif
