#pragma once

#include <span>
#include <vector>

#include "specdec/core.hpp"
#include "specdec/models.hpp"

namespace specdec {

/// Result of one greedy verification forward.
///
/// `accepted` followed by `correction` is exactly what target-only greedy
/// decoding emits at those positions. On full acceptance the correction is
/// the bonus token that the same forward yields for free.
struct VerificationOutcome {
  std::vector<TokenId> accepted;
  TokenId correction = 0;
  std::vector<NodeId> accepted_node_ids;  // winning path, root first
  std::vector<NodeId> rejected_node_ids;  // every other node, ascending
  bool fully_accepted = false;
  NodeId first_rejected = kNoNode;  // preferred continuation past the winning path
};

/// Longest draft prefix matching the target's argmax. One target forward of
/// width draft.size() + 1. Throws EmptyDraft on an empty draft.
VerificationOutcome verify_linear(ModelSession& target, std::span<const TokenId> prefix,
                                  std::span<const TokenId> draft);

/// Greedy verification of every root path at once. The deepest accepted node
/// wins; ties prefer trunk nodes, then the lower index. One target forward of
/// width tree.size() + 1. Trees with alias edges must be materialized first.
VerificationOutcome verify_tree(ModelSession& target, std::span<const TokenId> prefix,
                                const DraftTree& tree, const AttentionMask& mask);

}  // namespace specdec
