#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "specdec/kernels.hpp"

using namespace specdec;
namespace k = specdec::kernels;

namespace {

std::vector<k::ScoredToken> top_k_oracle(std::uint32_t key, TokenId first, std::size_t count,
                                         std::size_t want) {
  std::vector<k::ScoredToken> all;
  for (std::size_t i = 0; i < count; ++i) {
    const auto tok = static_cast<TokenId>(first + i);
    all.push_back({k::token_score(key, tok), tok});
  }
  std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
    return a.score != b.score ? a.score > b.score : a.token < b.token;
  });
  all.resize(std::min(want, all.size()));
  return all;
}

class BackendGuard {
 public:
  BackendGuard() : saved_(k::active_backend()) {}
  ~BackendGuard() { k::set_backend(saved_); }

 private:
  k::Backend saved_;
};

}  // namespace

TEST(Kernels, ScalarMatchesOracle) {
  std::mt19937 rng(5);
  for (int iter = 0; iter < 200; ++iter) {
    const std::uint32_t key = rng();
    const std::size_t count = rng() % 300;
    const TokenId first = rng() % 50;
    std::vector<std::uint32_t> scores(count);
    k::scalar::hashed_scores(key, first, scores);
    for (std::size_t i = 0; i < count; ++i) {
      ASSERT_EQ(scores[i], k::token_score(key, static_cast<TokenId>(first + i)));
    }
    const std::size_t want = rng() % 9;
    ASSERT_EQ(k::scalar::top_k_hashed(key, first, count, want), top_k_oracle(key, first, count, want));
  }
}

TEST(Kernels, EveryBackendMatchesScalar) {
  BackendGuard guard;
  std::mt19937 rng(6);
  for (auto b : {k::Backend::Scalar, k::Backend::Avx2, k::Backend::Neon}) {
    if (!k::supported(b)) continue;
    k::set_backend(b);
    EXPECT_EQ(k::active_backend(), b);
    // Every tail length around the vector width, then random sizes.
    for (std::size_t count = 0; count < 70; ++count) {
      const std::uint32_t key = rng();
      std::vector<std::uint32_t> got(count), want(count);
      k::hashed_scores(key, 1, got);
      k::scalar::hashed_scores(key, 1, want);
      ASSERT_EQ(got, want) << k::name(b) << " count " << count;
      for (std::size_t kk : {0, 1, 3, 8}) {
        ASSERT_EQ(k::top_k_hashed(key, 1, count, kk), k::scalar::top_k_hashed(key, 1, count, kk))
            << k::name(b) << " count " << count << " k " << kk;
      }
    }
    for (int iter = 0; iter < 100; ++iter) {
      const std::uint32_t key = rng();
      const std::size_t count = rng() % 5000;
      const std::size_t kk = 1 + rng() % 16;
      ASSERT_EQ(k::top_k_hashed(key, 1, count, kk), k::scalar::top_k_hashed(key, 1, count, kk));
    }
  }
}

TEST(Kernels, SetBackendRejectsUnsupported) {
  BackendGuard guard;
  for (auto b : {k::Backend::Avx2, k::Backend::Neon}) {
    if (k::supported(b)) continue;
    EXPECT_THROW(k::set_backend(b), Error);
  }
  EXPECT_TRUE(k::supported(k::Backend::Scalar));
}
