#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "specdec/error.hpp"

namespace specdec {

using TokenId = std::uint32_t;

// Token 0 is reserved as end-of-sequence by the synthetic and trace backends.
inline constexpr TokenId kEosToken = 0;

struct TokenProb {
  TokenId token = 0;
  double prob = 0.0;

  friend bool operator==(const TokenProb&, const TokenProb&) = default;
};

/// Top-k slice of a next-token distribution.
///
/// Entries are kept sorted by probability, highest first, with ties broken by
/// the lower token id. Probabilities are the full-vocabulary softmax values,
/// so their sum may be below one.
class Distribution {
 public:
  Distribution() = default;

  /// Sorts and validates; throws ConfigError on duplicates, probs outside
  /// (0, 1], or a total above 1 + 1e-9.
  explicit Distribution(std::vector<TokenProb> entries);

  std::span<const TokenProb> entries() const noexcept { return entries_; }
  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }

  TokenId argmax() const;
  double top_prob() const;

  /// 1-based rank of `token`, or nullopt when it is outside the top-k.
  std::optional<std::size_t> rank_of(TokenId token) const noexcept;

  /// Probability of `token` or 0 when absent.
  double prob_of(TokenId token) const noexcept;

  const TokenProb& operator[](std::size_t i) const { return entries_.at(i); }

  friend bool operator==(const Distribution&, const Distribution&) = default;

 private:
  std::vector<TokenProb> entries_;
};

/// Tokens with the absolute position of the first one.
struct Sequence {
  std::vector<TokenId> tokens;
  std::size_t base_position = 0;

  std::size_t size() const noexcept { return tokens.size(); }
  bool empty() const noexcept { return tokens.empty(); }
  std::size_t end_position() const noexcept { return base_position + tokens.size(); }

  friend bool operator==(const Sequence&, const Sequence&) = default;
};

using NodeId = std::int32_t;
inline constexpr NodeId kNoNode = -1;
inline constexpr std::size_t kDefaultMaxTreeNodes = 64;

enum class Origin : std::uint8_t { Trunk, Branch, Regen };

struct DraftNode {
  TokenId token = 0;
  NodeId parent = kNoNode;  // kNoNode: child of the committed prefix
  std::size_t position = 0;
  double prob = 1.0;
  Origin origin = Origin::Trunk;

  friend bool operator==(const DraftNode&, const DraftNode&) = default;
};

/// One step of a walk through a tree, following alias edges.
struct PathStep {
  NodeId node = kNoNode;
  std::size_t position = 0;  // renumbered along the walk
  bool adopted = false;      // reached through an alias edge
};

/// Token tree rooted at the end of a committed prefix.
///
/// Nodes reference their parent by index. A node may additionally carry an
/// alias edge to another node with the same token; the alias target's
/// descendants then continue the aliased node without being copied. Positions
/// stored on adopted nodes keep their original values; walks renumber them.
class DraftTree {
 public:
  explicit DraftTree(std::size_t root_prefix_len = 0,
                     std::size_t max_nodes = kDefaultMaxTreeNodes);

  /// Unchecked construction; `build_attention_mask` and `validate` report
  /// structural problems.
  static DraftTree from_nodes(std::vector<DraftNode> nodes, std::size_t root_prefix_len,
                              std::size_t max_nodes = kDefaultMaxTreeNodes);

  /// Appends a node under `parent` and derives its position. Throws
  /// MalformedTree on a bad parent, a second trunk child, or a full tree.
  NodeId add_node(TokenId token, NodeId parent, double prob, Origin origin);

  std::size_t size() const noexcept { return nodes_.size(); }
  bool empty() const noexcept { return nodes_.empty(); }
  std::size_t root_prefix_len() const noexcept { return root_prefix_len_; }
  std::size_t max_nodes() const noexcept { return max_nodes_; }
  const DraftNode& node(NodeId id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  std::span<const DraftNode> nodes() const noexcept { return nodes_; }
  NodeId alias(NodeId id) const { return alias_.at(static_cast<std::size_t>(id)); }
  std::size_t alias_count() const noexcept;

  std::vector<NodeId> children(NodeId id) const;  // real children, index order
  std::vector<NodeId> roots() const;

  /// Children reachable from `id`: its own, then those adopted via its alias.
  std::vector<NodeId> continuations(NodeId id) const;

  /// True when `to` is reachable from `from` through child and alias edges.
  bool reaches(NodeId from, NodeId to) const;

  /// Ancestor chain of `id` (root first, `id` last) along parent links.
  std::vector<NodeId> ancestor_path(NodeId id) const;

  /// Every root-to-leaf walk through child and alias edges.
  std::vector<std::vector<PathStep>> paths() const;

  /// Checks the forest invariants; throws MalformedTree.
  void validate() const;

  /// Makes the descendants of `trunk_node` continuations of `branch_tip`.
  ///
  /// Requires equal tokens, |position difference| <= merge_window, a leaf
  /// branch tip without an alias, and no reachability between the two nodes.
  /// Node count is unchanged. Throws MergeMismatch or MalformedTree.
  DraftTree graft(NodeId branch_tip, NodeId trunk_node, std::size_t merge_window = 1) const;

  friend bool operator==(const DraftTree&, const DraftTree&) = default;

 private:
  std::vector<DraftNode> nodes_;
  std::vector<NodeId> alias_;
  std::size_t root_prefix_len_ = 0;
  std::size_t max_nodes_ = kDefaultMaxTreeNodes;
};

/// A tree with alias edges expanded into real nodes.
struct MaterializedTree {
  DraftTree tree;
  std::vector<NodeId> source;  // node in the original tree
  std::vector<bool> adopted;   // copied through an alias edge
};

/// Expands alias edges depth-first (real children before adopted ones).
/// Stops adding nodes at `max_nodes` and drops nodes past `max_position`.
MaterializedTree materialize(const DraftTree& tree, std::size_t max_nodes,
                             std::size_t max_position = SIZE_MAX);

/// Path-shaped tree over `seq`; probs are 1.0 placeholders.
DraftTree tree_from_sequence(const Sequence& seq,
                             std::size_t max_nodes = kDefaultMaxTreeNodes);

/// Square ancestor-visibility matrix: visible(i, j) iff j is i or an ancestor.
class AttentionMask {
 public:
  AttentionMask() = default;
  explicit AttentionMask(std::size_t n);

  std::size_t size() const noexcept { return n_; }
  bool visible(std::size_t row, std::size_t col) const;
  void set(std::size_t row, std::size_t col);
  std::size_t row_count(std::size_t row) const;
  std::vector<std::size_t> row_indices(std::size_t row) const;

  friend bool operator==(const AttentionMask&, const AttentionMask&) = default;

 private:
  std::size_t words_per_row() const noexcept { return (n_ + 63) / 64; }

  std::size_t n_ = 0;
  std::vector<std::uint64_t> bits_;
};

/// Throws MalformedTree on cyclic or out-of-range parent links.
AttentionMask build_attention_mask(const DraftTree& tree);

/// Tokens along the ancestor chain of `id`, root first.
std::vector<TokenId> path_tokens(const DraftTree& tree, NodeId id);

}  // namespace specdec
