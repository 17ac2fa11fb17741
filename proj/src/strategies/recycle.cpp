#include <algorithm>
#include <cstdlib>

#include "common.hpp"

namespace specdec {

namespace {

std::size_t distance(std::size_t a, std::size_t b) { return a > b ? a - b : b - a; }

}  // namespace

RecycleResult recycle_round(ModelSession& draft, const RecycleState& state,
                            std::span<const TokenId> context, const StrategyConfig& cfg,
                            std::size_t limit, bool truncate) {
  RecycleResult out;
  const std::size_t window = cfg.merge_window;
  const std::size_t retain_cap = limit + window;
  out.tree = DraftTree(context.size(), 2 * (limit + window) + 2);
  std::vector<DraftedToken> info;

  // Retained branch: the stale draft re-rooted at the corrected prefix.
  NodeId retained_tip = kNoNode;
  std::size_t retained_len = std::min(state.stale.size(), retain_cap);
  for (std::size_t i = 0; i < retained_len; ++i) {
    retained_tip = out.tree.add_node(state.stale[i].token, retained_tip, state.stale[i].prob,
                                     Origin::Trunk);
    info.push_back(state.stale[i]);
  }
  std::vector<TokenId> retained_ctx(
      state.stale_context.begin(),
      state.stale_context.end() - static_cast<std::ptrdiff_t>(state.stale.size() - retained_len));
  bool alive = state.extendable && retained_len == state.stale.size() && retained_len < retain_cap;

  std::vector<TokenId> regen_ctx(context.begin(), context.end());
  NodeId regen_tip = kNoNode;
  std::vector<NodeId> regen_nodes;
  NodeId match = kNoNode;
  bool regen_stopped = false;
  while (regen_nodes.size() < limit) {
    auto rd = detail::try_distribution(draft.model(), regen_ctx);
    if (!rd) {
      regen_stopped = true;
      break;
    }
    std::optional<Distribution> ed;
    if (alive) {
      ed = detail::try_distribution(draft.model(), retained_ctx);
      if (!ed) alive = false;
    }
    draft.charge(cfg.free_retention || !ed ? 1 : 2);

    DraftedToken r{rd->argmax(), rd->top_prob(), std::move(*rd), false};
    regen_tip = out.tree.add_node(r.token, regen_tip, r.prob, Origin::Regen);
    regen_nodes.push_back(regen_tip);
    regen_ctx.push_back(r.token);
    info.push_back(r);

    if (ed) {
      DraftedToken e{ed->argmax(), ed->top_prob(), std::move(*ed), false};
      retained_tip = out.tree.add_node(e.token, retained_tip, e.prob, Origin::Trunk);
      retained_ctx.push_back(e.token);
      ++retained_len;
      alive = !detail::stops_draft(e, cfg, truncate) && retained_len < retain_cap;
      info.push_back(std::move(e));
    }

    const auto& rn = out.tree.node(regen_tip);
    std::size_t best_diff = window + 1;
    for (std::size_t i = 0; i < out.tree.size(); ++i) {
      const auto& n = out.tree.node(static_cast<NodeId>(i));
      if (n.origin != Origin::Trunk || n.token != rn.token) continue;
      const std::size_t d = distance(n.position, rn.position);
      if (d < best_diff) {
        best_diff = d;
        match = static_cast<NodeId>(i);
      }
    }
    if (match != kNoNode) {
      out.tree = out.tree.graft(regen_tip, match, window);
      out.grafted = true;
      break;
    }
    if (detail::stops_draft(r, cfg, truncate)) {
      regen_stopped = true;
      break;
    }
  }

  for (NodeId id : regen_nodes) out.path.push_back(info[static_cast<std::size_t>(id)]);
  if (match != kNoNode) {
    // Adopt the retained branch past the matched node.
    NodeId cur = match;
    for (;;) {
      NodeId next = kNoNode;
      for (NodeId c : out.tree.children(cur)) {
        if (out.tree.node(c).origin == Origin::Trunk) next = c;
      }
      if (next == kNoNode) break;
      DraftedToken t = info[static_cast<std::size_t>(next)];
      t.adopted = true;
      out.path.push_back(std::move(t));
      cur = next;
    }
  }

  std::size_t keep = 0;
  out.stopped = false;
  for (; keep < out.path.size() && keep < limit; ++keep) {
    if (detail::stops_draft(out.path[keep], cfg, truncate)) {
      out.stopped = true;
      ++keep;
      break;
    }
  }
  out.path.resize(keep);
  if (!out.grafted && regen_stopped) out.stopped = true;
  for (const auto& t : out.path) out.steps_saved += t.adopted ? 1 : 0;
  return out;
}

}  // namespace specdec
