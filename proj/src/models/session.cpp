#include <algorithm>

#include "specdec/models.hpp"

namespace specdec {

Distribution ModelSession::next_distribution(std::span<const TokenId> prefix) {
  Distribution d = model_->distribution(prefix);
  counter_.charge(1);
  return d;
}

std::vector<Distribution> ModelSession::batch_distributions(const DraftTree& tree,
                                                            const AttentionMask& mask,
                                                            std::span<const TokenId> committed) {
  if (mask.size() != tree.size()) {
    throw Error(ErrorCode::MaskMismatch, "mask and tree sizes differ");
  }
  std::vector<Distribution> out;
  out.reserve(tree.size());
  std::vector<TokenId> context;
  for (std::size_t i = 0; i < tree.size(); ++i) {
    // Visible nodes form the ancestor chain; positions order them.
    auto visible = mask.row_indices(i);
    std::sort(visible.begin(), visible.end(), [&](std::size_t a, std::size_t b) {
      return tree.node(static_cast<NodeId>(a)).position < tree.node(static_cast<NodeId>(b)).position;
    });
    context.assign(committed.begin(), committed.end());
    for (std::size_t j : visible) context.push_back(tree.node(static_cast<NodeId>(j)).token);
    out.push_back(model_->distribution(context));
  }
  counter_.charge(tree.size());
  return out;
}

std::vector<Distribution> ModelSession::batch(std::span<const std::vector<TokenId>> contexts,
                                              std::optional<std::size_t> width) {
  std::vector<Distribution> out;
  out.reserve(contexts.size());
  for (const auto& c : contexts) out.push_back(model_->distribution(c));
  counter_.charge(width.value_or(contexts.size()));
  return out;
}

}  // namespace specdec
