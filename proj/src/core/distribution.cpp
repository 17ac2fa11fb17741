#include <algorithm>
#include <string>

#include "specdec/core.hpp"

namespace specdec {

Distribution::Distribution(std::vector<TokenProb> entries) : entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end(), [](const TokenProb& a, const TokenProb& b) {
    if (a.prob != b.prob) return a.prob > b.prob;
    return a.token < b.token;
  });
  double total = 0.0;
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    const auto& e = entries_[i];
    if (!(e.prob > 0.0 && e.prob <= 1.0)) {
      throw Error(ErrorCode::ConfigError,
                  "probability out of (0,1] for token " + std::to_string(e.token));
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (entries_[j].token == e.token) {
        throw Error(ErrorCode::ConfigError, "duplicate token " + std::to_string(e.token));
      }
    }
    total += e.prob;
  }
  if (total > 1.0 + 1e-9) {
    throw Error(ErrorCode::ConfigError, "top-k mass exceeds 1: " + std::to_string(total));
  }
}

TokenId Distribution::argmax() const {
  if (entries_.empty()) throw Error(ErrorCode::ConfigError, "argmax of empty distribution");
  return entries_.front().token;
}

double Distribution::top_prob() const {
  if (entries_.empty()) throw Error(ErrorCode::ConfigError, "top_prob of empty distribution");
  return entries_.front().prob;
}

std::optional<std::size_t> Distribution::rank_of(TokenId token) const noexcept {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    if (entries_[i].token == token) return i + 1;
  }
  return std::nullopt;
}

double Distribution::prob_of(TokenId token) const noexcept {
  for (const auto& e : entries_) {
    if (e.token == token) return e.prob;
  }
  return 0.0;
}

}  // namespace specdec
