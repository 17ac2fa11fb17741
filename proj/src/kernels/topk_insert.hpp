#pragma once

#include <cstddef>
#include <vector>

#include "specdec/kernels.hpp"

namespace specdec::kernels::detail {

// Bounded best-first list. Candidates arrive in increasing token order, so a
// later candidate with an equal score never displaces an earlier one.
class TopKBuffer {
 public:
  explicit TopKBuffer(std::size_t k) : k_(k) { items_.reserve(k + 1); }

  bool full() const noexcept { return items_.size() == k_; }

  // Lowest score that still gets in once the buffer is full.
  std::uint32_t threshold() const noexcept { return items_.back().score; }

  void offer(std::uint32_t score, TokenId token) {
    if (k_ == 0) return;
    if (full() && score <= threshold()) return;
    std::size_t pos = items_.size();
    while (pos > 0 && items_[pos - 1].score < score) --pos;
    items_.insert(items_.begin() + static_cast<std::ptrdiff_t>(pos), ScoredToken{score, token});
    if (items_.size() > k_) items_.pop_back();
  }

  std::vector<ScoredToken> take() && { return std::move(items_); }

 private:
  std::size_t k_;
  std::vector<ScoredToken> items_;
};

}  // namespace specdec::kernels::detail
