#include "specdec/kernels.hpp"
#include "topk_insert.hpp"

namespace specdec::kernels::scalar {

void hashed_scores(std::uint32_t key, TokenId first, std::span<std::uint32_t> scores) {
  for (std::size_t i = 0; i < scores.size(); ++i) {
    scores[i] = token_score(key, first + static_cast<TokenId>(i));
  }
}

std::vector<ScoredToken> top_k_hashed(std::uint32_t key, TokenId first, std::size_t count,
                                      std::size_t k) {
  detail::TopKBuffer best(k);
  for (std::size_t i = 0; i < count; ++i) {
    const TokenId token = first + static_cast<TokenId>(i);
    best.offer(token_score(key, token), token);
  }
  return std::move(best).take();
}

}  // namespace specdec::kernels::scalar
