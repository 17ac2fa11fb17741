#pragma once

#include <functional>
#include <random>
#include <set>
#include <vector>

#include "specdec/core.hpp"
#include "specdec/models.hpp"

namespace specdec::testing {

/// Model whose distribution is an arbitrary function of the context.
class ScriptedModel final : public TokenModel {
 public:
  using Fn = std::function<Distribution(std::span<const TokenId>)>;
  ScriptedModel(Fn fn, std::size_t vocab = 16, std::size_t k = 4)
      : fn_(std::move(fn)), vocab_(vocab), k_(k) {}

  ModelKind kind() const noexcept override { return ModelKind::SyntheticTarget; }
  std::size_t vocab_size() const noexcept override { return vocab_; }
  std::size_t top_k() const noexcept override { return k_; }
  Distribution distribution(std::span<const TokenId> context) const override { return fn_(context); }

 private:
  Fn fn_;
  std::size_t vocab_;
  std::size_t k_;
};

inline Distribution dist(std::initializer_list<TokenProb> entries) {
  return Distribution(std::vector<TokenProb>(entries));
}

/// Random forest in topological order: parent[i] < i or none.
inline std::vector<NodeId> random_parents(std::mt19937_64& rng, std::size_t n) {
  std::vector<NodeId> parents(n, kNoNode);
  for (std::size_t i = 1; i < n; ++i) {
    std::uniform_int_distribution<int> pick(-1, static_cast<int>(i) - 1);
    parents[i] = pick(rng);
  }
  return parents;
}

/// Builds a tree from a parent array, relabelling nodes by `order` so that
/// parents need not precede children. Positions follow depth.
inline DraftTree tree_from_parents(const std::vector<NodeId>& parents,
                                   const std::vector<TokenId>& tokens, std::size_t base,
                                   const std::vector<std::size_t>& order) {
  const std::size_t n = parents.size();
  std::vector<std::size_t> where(n);
  for (std::size_t i = 0; i < n; ++i) where[order[i]] = i;
  std::vector<std::size_t> depth(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (parents[i] != kNoNode) depth[i] = depth[static_cast<std::size_t>(parents[i])] + 1;
  }
  std::vector<DraftNode> nodes(n);
  std::vector<bool> has_trunk(n + 1, false);
  for (std::size_t i = 0; i < n; ++i) {
    auto& node = nodes[where[i]];
    node.token = tokens[i];
    node.parent = parents[i] == kNoNode ? kNoNode
                                        : static_cast<NodeId>(where[static_cast<std::size_t>(parents[i])]);
    node.position = base + depth[i];
    const std::size_t slot = parents[i] == kNoNode ? n : static_cast<std::size_t>(parents[i]);
    node.origin = has_trunk[slot] ? Origin::Branch : Origin::Trunk;
    has_trunk[slot] = true;
  }
  return DraftTree::from_nodes(std::move(nodes), base, std::max<std::size_t>(n, 1));
}

inline std::vector<std::size_t> identity_order(std::size_t n) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  return order;
}

/// Ancestor set of `id`, including itself, by chasing parent links.
inline std::set<std::size_t> ancestors_oracle(const DraftTree& tree, NodeId id) {
  std::set<std::size_t> out;
  for (NodeId cur = id; cur != kNoNode; cur = tree.node(cur).parent) {
    out.insert(static_cast<std::size_t>(cur));
  }
  return out;
}

/// Root-to-leaf token sequences through real parent links only.
inline std::vector<std::vector<NodeId>> leaf_paths_oracle(const DraftTree& tree) {
  std::vector<std::vector<NodeId>> out;
  for (std::size_t i = 0; i < tree.size(); ++i) {
    bool leaf = true;
    for (std::size_t j = 0; j < tree.size(); ++j) {
      if (tree.node(static_cast<NodeId>(j)).parent == static_cast<NodeId>(i)) leaf = false;
    }
    if (!leaf) continue;
    std::vector<NodeId> path;
    for (NodeId cur = static_cast<NodeId>(i); cur != kNoNode; cur = tree.node(cur).parent) {
      path.insert(path.begin(), cur);
    }
    out.push_back(path);
  }
  return out;
}

}  // namespace specdec::testing
