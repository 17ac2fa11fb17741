#include <string>

#include "specdec/core.hpp"

namespace specdec {

AttentionMask::AttentionMask(std::size_t n) : n_(n), bits_(n * words_per_row(), 0) {}

bool AttentionMask::visible(std::size_t row, std::size_t col) const {
  if (row >= n_ || col >= n_) throw Error(ErrorCode::MaskMismatch, "mask index out of range");
  return (bits_[row * words_per_row() + col / 64] >> (col % 64)) & 1U;
}

void AttentionMask::set(std::size_t row, std::size_t col) {
  if (row >= n_ || col >= n_) throw Error(ErrorCode::MaskMismatch, "mask index out of range");
  bits_[row * words_per_row() + col / 64] |= std::uint64_t{1} << (col % 64);
}

std::size_t AttentionMask::row_count(std::size_t row) const {
  std::size_t count = 0;
  for (std::size_t w = 0; w < words_per_row(); ++w) {
    count += static_cast<std::size_t>(__builtin_popcountll(bits_[row * words_per_row() + w]));
  }
  return count;
}

std::vector<std::size_t> AttentionMask::row_indices(std::size_t row) const {
  std::vector<std::size_t> out;
  for (std::size_t col = 0; col < n_; ++col) {
    if (visible(row, col)) out.push_back(col);
  }
  return out;
}

AttentionMask build_attention_mask(const DraftTree& tree) {
  const std::size_t n = tree.size();
  AttentionMask mask(n);
  // 0 = unvisited, 1 = on the current parent chain, 2 = row complete.
  std::vector<std::uint8_t> state(n, 0);
  std::vector<std::size_t> chain;
  for (std::size_t start = 0; start < n; ++start) {
    if (state[start] == 2) continue;
    chain.clear();
    std::size_t cur = start;
    for (;;) {
      if (state[cur] == 1) throw Error(ErrorCode::MalformedTree, "cyclic parent links at node " + std::to_string(cur));
      if (state[cur] == 2) break;
      state[cur] = 1;
      chain.push_back(cur);
      const NodeId parent = tree.node(static_cast<NodeId>(cur)).parent;
      if (parent == kNoNode) break;
      if (parent < 0 || static_cast<std::size_t>(parent) >= n) {
        throw Error(ErrorCode::MalformedTree, "parent out of range at node " + std::to_string(cur));
      }
      cur = static_cast<std::size_t>(parent);
    }
    // Unwind from the topmost new node: each row is its parent's row plus itself.
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
      const std::size_t i = *it;
      const NodeId parent = tree.node(static_cast<NodeId>(i)).parent;
      if (parent != kNoNode) {
        for (std::size_t col : mask.row_indices(static_cast<std::size_t>(parent))) mask.set(i, col);
      }
      mask.set(i, i);
      state[i] = 2;
    }
  }
  return mask;
}

}  // namespace specdec
