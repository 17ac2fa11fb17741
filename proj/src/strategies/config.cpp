#include <string>

#include "specdec/strategies.hpp"

namespace specdec {

std::string_view to_string(StrategyKind kind) noexcept {
  switch (kind) {
    case StrategyKind::Autoregressive: return "ar";
    case StrategyKind::BaselineSpec: return "baseline";
    case StrategyKind::Asp: return "asp";
    case StrategyKind::AspRecycle: return "asp_recycle";
    case StrategyKind::Tsp: return "tsp";
  }
  return "unknown";
}

StrategyKind parse_strategy(std::string_view name) {
  for (auto k : {StrategyKind::Autoregressive, StrategyKind::BaselineSpec, StrategyKind::Asp,
                 StrategyKind::AspRecycle, StrategyKind::Tsp}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorCode::ConfigError, "unknown strategy '" + std::string(name) + "'");
}

void StrategyConfig::validate(std::size_t model_top_k) const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::ConfigError, msg); };
  if (draft_len == 0) fail("draft_len must be >= 1");
  if (max_draft_len == 0) fail("max_draft_len must be >= 1");
  if (!(tau >= 0.0 && tau <= 1.0)) fail("tau must lie in [0,1]");
  if (branch_k < 2 || branch_k > model_top_k) {
    fail("branch_k must lie in [2, " + std::to_string(model_top_k) + "]");
  }
  if (max_output_len == 0) fail("max_output_len must be >= 1");
  if (max_tree_nodes == 0) fail("max_tree_nodes must be >= 1");
}

DecodeResult decode(const ModelPair& models, const Sequence& prompt, const StrategyConfig& cfg) {
  if (!models.target) throw Error(ErrorCode::ConfigError, "no target model");
  if (cfg.kind != StrategyKind::Autoregressive && !models.draft) {
    throw Error(ErrorCode::ConfigError, "no draft model");
  }
  switch (cfg.kind) {
    case StrategyKind::Autoregressive: return decode_autoregressive(*models.target, prompt, cfg);
    case StrategyKind::BaselineSpec:
      return decode_baseline_spec(*models.draft, *models.target, prompt, cfg);
    case StrategyKind::Asp:
    case StrategyKind::AspRecycle: return decode_asp(*models.draft, *models.target, prompt, cfg);
    case StrategyKind::Tsp: return decode_tsp(*models.draft, *models.target, prompt, cfg);
  }
  throw Error(ErrorCode::ConfigError, "unknown strategy");
}

}  // namespace specdec
