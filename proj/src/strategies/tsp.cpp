#include <algorithm>

#include "common.hpp"

namespace specdec {

using detail::DecodeState;

namespace {

std::size_t distance(std::size_t a, std::size_t b) { return a > b ? a - b : b - a; }

// Preferred continuation: the trunk child if any, else the lowest index.
NodeId preferred_next(const DraftTree& tree, const std::vector<NodeId>& options) {
  for (NodeId c : options) {
    if (tree.node(c).origin == Origin::Trunk) return c;
  }
  return options.empty() ? kNoNode : options.front();
}

class SparseTreeBuilder {
 public:
  SparseTreeBuilder(ModelSession& draft, std::span<const TokenId> context,
                    const StrategyConfig& cfg, std::size_t limit)
      : draft_(draft), context_(context), cfg_(cfg),
        max_position_(context.size() + limit - 1) {}

  SparseTreeRound build(const RecycleState& state, std::size_t limit) {
    out_.tree = DraftTree(context_.size(), cfg_.max_tree_nodes);

    std::vector<DraftedToken> trunk;
    bool stopped = false;
    if (state.usable()) {
      auto r = recycle_round(draft_, state, context_, cfg_, limit, false);
      trunk = std::move(r.path);
      out_.steps_saved += r.steps_saved;
      stopped = r.stopped;
    }
    if (!stopped && trunk.size() < limit) {
      detail::extend_linear(draft_, context_, trunk, limit, cfg_, false);
    }
    NodeId parent = kNoNode;
    std::vector<NodeId> trunk_ids;
    for (auto& t : trunk) {
      parent = out_.tree.add_node(t.token, parent, t.prob, Origin::Trunk);
      trunk_ids.push_back(parent);
      out_.info.push_back(std::move(t));
    }
    out_.trunk_len = trunk_ids.size();

    spawn_branches(trunk_ids);
    extend_branches();
    return std::move(out_);
  }

 private:
  struct Active {
    NodeId tip;
    std::vector<TokenId> context;
  };

  void spawn_branches(const std::vector<NodeId>& trunk_ids) {
    std::vector<UncertaintyMark> marks;
    for (NodeId id : trunk_ids) {
      const auto& info = out_.info[static_cast<std::size_t>(id)];
      if (info.prob >= cfg_.tau || info.dist.size() < cfg_.branch_k) continue;
      UncertaintyMark m;
      m.position = out_.tree.node(id).position;
      m.source_node = id;
      m.top_prob = info.prob;
      for (const auto& e : info.dist.entries()) {
        if (e.token != info.token) m.candidates.push_back(e);
      }
      marks.push_back(std::move(m));
    }
    std::stable_sort(marks.begin(), marks.end(), [](const auto& a, const auto& b) {
      return a.top_prob < b.top_prob;
    });
    if (marks.size() > cfg_.max_branches) marks.resize(cfg_.max_branches);

    for (auto& m : marks) {
      if (out_.tree.size() >= out_.tree.max_nodes()) break;
      const auto& src = out_.info[static_cast<std::size_t>(m.source_node)];
      const TokenProb seed = src.dist[cfg_.branch_k - 1];
      const NodeId parent = out_.tree.node(m.source_node).parent;
      const NodeId id = out_.tree.add_node(seed.token, parent, seed.prob, Origin::Branch);
      out_.info.push_back({seed.token, seed.prob, src.dist, false});
      out_.marks.push_back(std::move(m));
      ++out_.branches;
      if (try_graft(id) || seed.token == cfg_.eos) continue;
      std::vector<TokenId> ctx(context_.begin(), context_.end());
      for (TokenId t : path_tokens(out_.tree, id)) ctx.push_back(t);
      active_.push_back({id, std::move(ctx)});
    }
  }

  // Branches advance together, one batched draft forward per step.
  void extend_branches() {
    while (!active_.empty()) {
      std::erase_if(active_, [&](const Active& a) {
        return out_.tree.node(a.tip).position >= max_position_;
      });
      const std::size_t room = out_.tree.max_nodes() - out_.tree.size();
      if (active_.size() > room) active_.resize(room);
      if (active_.empty()) break;

      std::vector<std::optional<Distribution>> dists;
      std::size_t width = 0;
      for (const auto& a : active_) {
        dists.push_back(detail::try_distribution(draft_.model(), a.context));
        width += dists.back() ? 1 : 0;
      }
      if (width == 0) break;
      draft_.charge(width);

      std::vector<Active> next;
      for (std::size_t i = 0; i < active_.size(); ++i) {
        if (!dists[i]) continue;
        Active a = std::move(active_[i]);
        const TokenId tok = dists[i]->argmax();
        const double prob = dists[i]->top_prob();
        a.tip = out_.tree.add_node(tok, a.tip, prob, Origin::Branch);
        out_.info.push_back({tok, prob, std::move(*dists[i]), false});
        a.context.push_back(tok);
        if (try_graft(a.tip) || tok == cfg_.eos) continue;
        next.push_back(std::move(a));
      }
      active_ = std::move(next);
    }
  }

  // Joins a branch tip onto a matching node of another path, if any.
  bool try_graft(NodeId tip) {
    const auto& t = out_.tree.node(tip);
    const auto ancestors = out_.tree.ancestor_path(tip);
    std::vector<NodeId> candidates;
    for (std::size_t i = 0; i < out_.tree.size(); ++i) {
      const auto id = static_cast<NodeId>(i);
      const auto& n = out_.tree.node(id);
      if (id == tip || n.token != t.token || distance(n.position, t.position) > cfg_.merge_window) {
        continue;
      }
      if (std::find(ancestors.begin(), ancestors.end(), id) != ancestors.end()) continue;
      candidates.push_back(id);
    }
    std::stable_sort(candidates.begin(), candidates.end(), [&](NodeId a, NodeId b) {
      const auto& na = out_.tree.node(a);
      const auto& nb = out_.tree.node(b);
      const auto da = distance(na.position, t.position);
      const auto db = distance(nb.position, t.position);
      if (da != db) return da < db;
      return (na.origin == Origin::Trunk) > (nb.origin == Origin::Trunk);
    });
    for (NodeId c : candidates) {
      try {
        out_.tree = out_.tree.graft(tip, c, cfg_.merge_window);
      } catch (const Error& e) {
        if (e.code() == ErrorCode::MalformedTree || e.code() == ErrorCode::MergeMismatch) continue;
        throw;
      }
      out_.info[static_cast<std::size_t>(tip)].adopted = true;
      out_.steps_saved += adopted_length(c, t.position);
      return true;
    }
    return false;
  }

  std::size_t adopted_length(NodeId anchor, std::size_t tip_position) const {
    std::size_t count = 0;
    std::size_t position = tip_position;
    for (NodeId cur = anchor; count < out_.tree.max_nodes();) {
      cur = preferred_next(out_.tree, out_.tree.continuations(cur));
      if (cur == kNoNode || ++position > max_position_) break;
      ++count;
    }
    return count;
  }

  ModelSession& draft_;
  std::span<const TokenId> context_;
  const StrategyConfig& cfg_;
  std::size_t max_position_;
  SparseTreeRound out_;
  std::vector<Active> active_;
};

}  // namespace

SparseTreeRound build_sparse_tree(ModelSession& draft, std::span<const TokenId> context,
                                  const StrategyConfig& cfg, std::size_t limit,
                                  const RecycleState& state) {
  if (limit == 0) throw Error(ErrorCode::ConfigError, "sparse tree needs a positive limit");
  return SparseTreeBuilder(draft, context, cfg, limit).build(state, limit);
}

DecodeResult decode_tsp(const TokenModel& draft, const TokenModel& target, const Sequence& prompt,
                        const StrategyConfig& cfg) {
  cfg.validate(draft.top_k());
  ModelSession ds(draft), ts(target);
  DecodeState state(prompt, cfg);
  RecycleState carry;
  while (!state.finished()) {
    const std::size_t limit =
        std::min({cfg.max_draft_len, state.remaining() - 1, cfg.max_tree_nodes});
    if (limit == 0) {
      state.target_step(ts);
      continue;
    }
    auto round = build_sparse_tree(ds, state.context(), cfg, limit, carry);
    carry = {};
    if (round.tree.empty()) {
      state.target_step(ts);
      continue;
    }
    state.metrics().draft_steps_saved += round.steps_saved;
    state.metrics().marks_spawned += round.branches;

    const auto m = materialize(round.tree, cfg.max_tree_nodes, state.context().size() + limit - 1);
    const auto mask = build_attention_mask(m.tree);
    const auto outcome = verify_tree(ts, state.context(), m.tree, mask);
    auto& metrics = state.metrics();
    metrics.submitted_tokens += m.tree.size();
    for (NodeId id : outcome.accepted_node_ids) {
      const auto i = static_cast<std::size_t>(id);
      if (m.adopted[i] || round.info[static_cast<std::size_t>(m.source[i])].adopted) {
        ++metrics.grafted_committed;
      }
    }
    if (outcome.first_rejected != kNoNode) {
      const auto& info = round.info[static_cast<std::size_t>(m.source[outcome.first_rejected])];
      if (!info.adopted && !m.adopted[static_cast<std::size_t>(outcome.first_rejected)]) {
        metrics.record_miss_rank(info.dist.rank_of(outcome.correction).value_or(0));
      }
    }

    std::vector<TokenId> drafted_context(state.context().begin(), state.context().end());
    state.commit(outcome);

    if (outcome.first_rejected != kNoNode) {
      // Carry the rejected node's preferred chain into the next round.
      NodeId leaf = outcome.first_rejected;
      for (NodeId c = preferred_next(m.tree, m.tree.children(leaf)); c != kNoNode;
           c = preferred_next(m.tree, m.tree.children(c))) {
        DraftedToken t = round.info[static_cast<std::size_t>(m.source[static_cast<std::size_t>(c)])];
        t.token = m.tree.node(c).token;
        carry.stale.push_back(std::move(t));
        leaf = c;
      }
      for (TokenId t : path_tokens(m.tree, leaf)) drafted_context.push_back(t);
      carry.stale_context = std::move(drafted_context);
      carry.extendable = m.tree.node(leaf).token != cfg.eos;
    }
  }
  return std::move(state).finish(&ds, ts);
}

}  // namespace specdec
