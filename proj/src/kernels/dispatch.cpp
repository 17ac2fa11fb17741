#include <atomic>
#include <cstdlib>
#include <string>

#include "specdec/kernels.hpp"

namespace specdec::kernels {

namespace {

Backend detect() noexcept {
  if (const char* env = std::getenv("SPECDEC_KERNEL")) {
    const std::string_view want(env);
    for (Backend b : {Backend::Scalar, Backend::Avx2, Backend::Neon}) {
      if (want == name(b) && supported(b)) return b;
    }
  }
  if (supported(Backend::Avx2)) return Backend::Avx2;
  if (supported(Backend::Neon)) return Backend::Neon;
  return Backend::Scalar;
}

std::atomic<Backend>& current() {
  static std::atomic<Backend> backend{detect()};
  return backend;
}

}  // namespace

std::string_view name(Backend backend) noexcept {
  switch (backend) {
    case Backend::Scalar: return "scalar";
    case Backend::Avx2: return "avx2";
    case Backend::Neon: return "neon";
  }
  return "unknown";
}

bool supported(Backend backend) noexcept {
  switch (backend) {
    case Backend::Scalar: return true;
    case Backend::Avx2:
#if defined(__x86_64__) || defined(_M_X64)
      return __builtin_cpu_supports("avx2");
#else
      return false;
#endif
    case Backend::Neon:
#if defined(__aarch64__)
      return true;
#else
      return false;
#endif
  }
  return false;
}

Backend active_backend() noexcept { return current().load(std::memory_order_relaxed); }

void set_backend(Backend backend) {
  if (!supported(backend)) {
    throw Error(ErrorCode::ConfigError, "kernel backend not supported: " + std::string(name(backend)));
  }
  current().store(backend, std::memory_order_relaxed);
}

void hashed_scores(std::uint32_t key, TokenId first, std::span<std::uint32_t> scores) {
  switch (active_backend()) {
#if defined(__x86_64__) || defined(_M_X64)
    case Backend::Avx2: return avx2::hashed_scores(key, first, scores);
#endif
#if defined(__aarch64__)
    case Backend::Neon: return neon::hashed_scores(key, first, scores);
#endif
    default: return scalar::hashed_scores(key, first, scores);
  }
}

std::vector<ScoredToken> top_k_hashed(std::uint32_t key, TokenId first, std::size_t count,
                                      std::size_t k) {
  switch (active_backend()) {
#if defined(__x86_64__) || defined(_M_X64)
    case Backend::Avx2: return avx2::top_k_hashed(key, first, count, k);
#endif
#if defined(__aarch64__)
    case Backend::Neon: return neon::top_k_hashed(key, first, count, k);
#endif
    default: return scalar::top_k_hashed(key, first, count, k);
  }
}

}  // namespace specdec::kernels
