#include <algorithm>

#include "specdec/verify.hpp"

namespace specdec {

VerificationOutcome verify_linear(ModelSession& target, std::span<const TokenId> prefix,
                                  std::span<const TokenId> draft) {
  if (draft.empty()) throw Error(ErrorCode::EmptyDraft, "nothing to verify");
  target.charge(draft.size() + 1);

  VerificationOutcome out;
  std::vector<TokenId> context(prefix.begin(), prefix.end());
  context.reserve(prefix.size() + draft.size());
  // Logits past the first mismatch are never read, so only the accepted
  // prefix is evaluated.
  for (std::size_t i = 0;; ++i) {
    const TokenId want = target.model().distribution(context).argmax();
    if (i == draft.size()) {
      out.correction = want;
      out.fully_accepted = true;
      break;
    }
    if (draft[i] != want) {
      out.correction = want;
      out.first_rejected = static_cast<NodeId>(i);
      for (std::size_t r = i; r < draft.size(); ++r) out.rejected_node_ids.push_back(static_cast<NodeId>(r));
      break;
    }
    out.accepted.push_back(draft[i]);
    out.accepted_node_ids.push_back(static_cast<NodeId>(i));
    context.push_back(draft[i]);
  }
  return out;
}

namespace {

void check_mask(const DraftTree& tree, const AttentionMask& mask) {
  if (mask.size() != tree.size()) throw Error(ErrorCode::MaskMismatch, "mask and tree sizes differ");
  if (tree.alias_count() != 0) {
    throw Error(ErrorCode::MalformedTree, "verify_tree needs a materialized tree");
  }
  for (std::size_t i = 0; i < tree.size(); ++i) {
    const NodeId parent = tree.node(static_cast<NodeId>(i)).parent;
    bool ok = mask.visible(i, i);
    if (parent == kNoNode) {
      ok = ok && mask.row_count(i) == 1;
    } else {
      ok = ok && mask.visible(i, static_cast<std::size_t>(parent)) &&
           mask.row_count(i) == mask.row_count(static_cast<std::size_t>(parent)) + 1;
    }
    if (!ok) throw Error(ErrorCode::MaskMismatch, "mask row " + std::to_string(i) + " does not match tree");
  }
}

// Trunk first, then lower index.
bool preferred(const DraftTree& tree, NodeId a, NodeId b) {
  const bool ta = tree.node(a).origin == Origin::Trunk;
  const bool tb = tree.node(b).origin == Origin::Trunk;
  if (ta != tb) return ta;
  return a < b;
}

NodeId pick(const DraftTree& tree, const std::vector<NodeId>& nodes) {
  NodeId best = kNoNode;
  for (NodeId n : nodes) {
    if (best == kNoNode || preferred(tree, n, best)) best = n;
  }
  return best;
}

}  // namespace

VerificationOutcome verify_tree(ModelSession& target, std::span<const TokenId> prefix,
                                const DraftTree& tree, const AttentionMask& mask) {
  if (tree.empty()) throw Error(ErrorCode::EmptyDraft, "nothing to verify");
  check_mask(tree, mask);
  target.charge(tree.size() + 1);

  // kids[i + 1] holds the children of node i; kids[0] holds the roots.
  std::vector<std::vector<NodeId>> kids(tree.size() + 1);
  for (std::size_t i = 0; i < tree.size(); ++i) {
    kids[static_cast<std::size_t>(tree.node(static_cast<NodeId>(i)).parent + 1)].push_back(static_cast<NodeId>(i));
  }

  struct Best {
    NodeId node = kNoNode;
    std::size_t depth = 0;
    TokenId next = 0;
  } best;

  std::vector<TokenId> context(prefix.begin(), prefix.end());
  auto explore = [&](auto&& self, NodeId node, std::size_t depth) -> void {
    const TokenId want = target.model().distribution(context).argmax();
    if (node == kNoNode) {
      best.next = want;
    } else if (depth > best.depth || (depth == best.depth && preferred(tree, node, best.node))) {
      best = {node, depth, want};
    }
    for (NodeId c : kids[static_cast<std::size_t>(node + 1)]) {
      if (tree.node(c).token != want) continue;
      context.push_back(want);
      self(self, c, depth + 1);
      context.pop_back();
    }
  };
  explore(explore, kNoNode, 0);

  VerificationOutcome out;
  out.correction = best.next;
  if (best.node != kNoNode) out.accepted_node_ids = tree.ancestor_path(best.node);
  for (NodeId n : out.accepted_node_ids) out.accepted.push_back(tree.node(n).token);
  const auto& tail = kids[static_cast<std::size_t>(best.node + 1)];
  out.fully_accepted = best.node != kNoNode && tail.empty();
  out.first_rejected = pick(tree, tail);
  std::vector<bool> on_path(tree.size(), false);
  for (NodeId n : out.accepted_node_ids) on_path[static_cast<std::size_t>(n)] = true;
  for (std::size_t i = 0; i < tree.size(); ++i) {
    if (!on_path[i]) out.rejected_node_ids.push_back(static_cast<NodeId>(i));
  }
  return out;
}

}  // namespace specdec
