#include <algorithm>
#include <cstdlib>
#include <string>

#include "specdec/core.hpp"

namespace specdec {

namespace {

[[noreturn]] void malformed(const std::string& why) { throw Error(ErrorCode::MalformedTree, why); }

std::size_t abs_diff(std::size_t a, std::size_t b) { return a > b ? a - b : b - a; }

}  // namespace

DraftTree::DraftTree(std::size_t root_prefix_len, std::size_t max_nodes)
    : root_prefix_len_(root_prefix_len), max_nodes_(max_nodes) {}

DraftTree DraftTree::from_nodes(std::vector<DraftNode> nodes, std::size_t root_prefix_len,
                                std::size_t max_nodes) {
  DraftTree tree(root_prefix_len, std::max(max_nodes, nodes.size()));
  tree.alias_.assign(nodes.size(), kNoNode);
  tree.nodes_ = std::move(nodes);
  return tree;
}

NodeId DraftTree::add_node(TokenId token, NodeId parent, double prob, Origin origin) {
  if (nodes_.size() >= max_nodes_) {
    malformed("tree is full (" + std::to_string(max_nodes_) + " nodes)");
  }
  if (parent != kNoNode && (parent < 0 || static_cast<std::size_t>(parent) >= nodes_.size())) {
    malformed("parent " + std::to_string(parent) + " out of range");
  }
  if (origin == Origin::Trunk) {
    for (const auto& n : nodes_) {
      if (n.parent == parent && n.origin == Origin::Trunk) {
        malformed("second trunk child under node " + std::to_string(parent));
      }
    }
  }
  DraftNode node;
  node.token = token;
  node.parent = parent;
  node.position = parent == kNoNode ? root_prefix_len_ : nodes_[parent].position + 1;
  node.prob = prob;
  node.origin = origin;
  nodes_.push_back(node);
  alias_.push_back(kNoNode);
  return static_cast<NodeId>(nodes_.size() - 1);
}

std::size_t DraftTree::alias_count() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(alias_.begin(), alias_.end(), [](NodeId a) { return a != kNoNode; }));
}

std::vector<NodeId> DraftTree::children(NodeId id) const {
  std::vector<NodeId> out;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].parent == id) out.push_back(static_cast<NodeId>(i));
  }
  return out;
}

std::vector<NodeId> DraftTree::roots() const { return children(kNoNode); }

std::vector<NodeId> DraftTree::continuations(NodeId id) const {
  std::vector<NodeId> out;
  // Alias chains are followed iteratively; `seen` bounds malformed loops.
  std::vector<bool> seen(nodes_.size(), false);
  NodeId cur = id;
  while (cur != kNoNode && !seen[static_cast<std::size_t>(cur)]) {
    seen[static_cast<std::size_t>(cur)] = true;
    auto kids = children(cur);
    out.insert(out.end(), kids.begin(), kids.end());
    cur = alias_[static_cast<std::size_t>(cur)];
  }
  return out;
}

bool DraftTree::reaches(NodeId from, NodeId to) const {
  std::vector<bool> seen(nodes_.size(), false);
  std::vector<NodeId> stack{from};
  while (!stack.empty()) {
    NodeId cur = stack.back();
    stack.pop_back();
    if (cur == to) return true;
    if (seen[static_cast<std::size_t>(cur)]) continue;
    seen[static_cast<std::size_t>(cur)] = true;
    for (NodeId c : continuations(cur)) stack.push_back(c);
  }
  return false;
}

std::vector<NodeId> DraftTree::ancestor_path(NodeId id) const {
  std::vector<NodeId> out;
  std::size_t guard = 0;
  for (NodeId cur = id; cur != kNoNode; cur = nodes_.at(static_cast<std::size_t>(cur)).parent) {
    if (++guard > nodes_.size()) malformed("cyclic parent links");
    out.push_back(cur);
  }
  std::reverse(out.begin(), out.end());
  return out;
}

std::vector<std::vector<PathStep>> DraftTree::paths() const {
  std::vector<std::vector<PathStep>> out;
  std::vector<PathStep> current;
  auto walk = [&](auto&& self, NodeId id, std::size_t position, bool adopted) -> void {
    if (current.size() > nodes_.size() * (alias_count() + 1)) malformed("walk does not terminate");
    current.push_back({id, position, adopted});
    auto own = children(id);
    bool leaf = own.empty();
    for (NodeId c : own) self(self, c, position + 1, adopted);
    NodeId target = alias_[static_cast<std::size_t>(id)];
    if (target != kNoNode) {
      for (NodeId c : continuations(target)) {
        leaf = false;
        self(self, c, position + 1, true);
      }
    }
    if (leaf) out.push_back(current);
    current.pop_back();
  };
  for (NodeId r : roots()) walk(walk, r, root_prefix_len_, false);
  return out;
}

void DraftTree::validate() const {
  if (nodes_.size() > max_nodes_) malformed("node count exceeds max_tree_nodes");
  const auto n = nodes_.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto& node = nodes_[i];
    if (node.parent != kNoNode && (node.parent < 0 || static_cast<std::size_t>(node.parent) >= n)) {
      malformed("parent out of range at node " + std::to_string(i));
    }
    ancestor_path(static_cast<NodeId>(i));  // throws on cycles
    const std::size_t expected =
        node.parent == kNoNode ? root_prefix_len_ : nodes_[node.parent].position + 1;
    if (node.position != expected) malformed("position gap at node " + std::to_string(i));
  }
  for (std::size_t i = 0; i < n; ++i) {
    int trunk = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (nodes_[j].parent == static_cast<NodeId>(i) && nodes_[j].origin == Origin::Trunk) ++trunk;
    }
    if (trunk > 1) malformed("multiple trunk children under node " + std::to_string(i));
  }
  for (std::size_t i = 0; i < n; ++i) {
    NodeId t = alias_[i];
    if (t == kNoNode) continue;
    if (nodes_[static_cast<std::size_t>(t)].token != nodes_[i].token) {
      malformed("alias joins different tokens at node " + std::to_string(i));
    }
    if (reaches(t, static_cast<NodeId>(i))) malformed("alias cycle at node " + std::to_string(i));
  }
}

DraftTree DraftTree::graft(NodeId branch_tip, NodeId trunk_node, std::size_t merge_window) const {
  const auto n = static_cast<NodeId>(nodes_.size());
  if (branch_tip < 0 || branch_tip >= n || trunk_node < 0 || trunk_node >= n) {
    malformed("graft endpoint out of range");
  }
  if (branch_tip == trunk_node) {
    throw Error(ErrorCode::MergeMismatch, "cannot graft a node onto itself");
  }
  const auto& tip = node(branch_tip);
  const auto& anchor = node(trunk_node);
  if (tip.token != anchor.token) {
    throw Error(ErrorCode::MergeMismatch, "tokens differ: " + std::to_string(tip.token) +
                                              " vs " + std::to_string(anchor.token));
  }
  if (abs_diff(tip.position, anchor.position) > merge_window) {
    throw Error(ErrorCode::MergeMismatch, "positions " + std::to_string(tip.position) + " and " +
                                              std::to_string(anchor.position) +
                                              " outside merge window");
  }
  if (alias(branch_tip) != kNoNode || !children(branch_tip).empty()) {
    malformed("branch tip must be an unaliased leaf");
  }
  if (reaches(trunk_node, branch_tip)) malformed("graft would create a cycle");
  DraftTree out = *this;
  out.alias_[static_cast<std::size_t>(branch_tip)] = trunk_node;
  return out;
}

MaterializedTree materialize(const DraftTree& tree, std::size_t max_nodes,
                             std::size_t max_position) {
  MaterializedTree out{DraftTree(tree.root_prefix_len(), max_nodes), {}, {}};
  struct Frame {
    NodeId source;
    NodeId new_parent;
    bool adopted;
  };
  std::vector<Frame> stack;
  auto push_continuations = [&](NodeId source, NodeId new_parent, bool adopted) {
    std::vector<Frame> frames;
    for (NodeId c : tree.children(source)) frames.push_back({c, new_parent, adopted});
    if (source != kNoNode && tree.alias(source) != kNoNode) {
      for (NodeId c : tree.continuations(tree.alias(source))) frames.push_back({c, new_parent, true});
    }
    // Reverse so the first continuation is expanded first.
    for (auto it = frames.rbegin(); it != frames.rend(); ++it) stack.push_back(*it);
  };
  push_continuations(kNoNode, kNoNode, false);
  std::size_t guard = 0;
  const std::size_t guard_limit = (tree.size() + 1) * (tree.alias_count() + 1) * max_nodes + 1;
  while (!stack.empty() && out.tree.size() < max_nodes) {
    if (++guard > guard_limit) malformed("materialization does not terminate");
    Frame f = stack.back();
    stack.pop_back();
    const auto& src = tree.node(f.source);
    const std::size_t position =
        f.new_parent == kNoNode ? tree.root_prefix_len() : out.tree.node(f.new_parent).position + 1;
    if (position > max_position) continue;
    // A copied trunk node can meet a real trunk sibling; demote the copy.
    Origin origin = src.origin;
    if (origin == Origin::Trunk) {
      for (NodeId sib : out.tree.children(f.new_parent)) {
        if (out.tree.node(sib).origin == Origin::Trunk) {
          origin = Origin::Branch;
          break;
        }
      }
    }
    NodeId id = out.tree.add_node(src.token, f.new_parent, src.prob, origin);
    out.source.push_back(f.source);
    out.adopted.push_back(f.adopted);
    push_continuations(f.source, id, f.adopted);
  }
  return out;
}

DraftTree tree_from_sequence(const Sequence& seq, std::size_t max_nodes) {
  if (seq.empty()) throw Error(ErrorCode::EmptyDraft, "cannot build a tree from an empty sequence");
  DraftTree tree(seq.base_position, std::max(max_nodes, seq.size()));
  NodeId parent = kNoNode;
  for (TokenId t : seq.tokens) parent = tree.add_node(t, parent, 1.0, Origin::Trunk);
  return tree;
}

std::vector<TokenId> path_tokens(const DraftTree& tree, NodeId id) {
  std::vector<TokenId> out;
  for (NodeId n : tree.ancestor_path(id)) out.push_back(tree.node(n).token);
  return out;
}

}  // namespace specdec
