#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "helpers.hpp"
#include "specdec/models.hpp"

using namespace specdec;
using namespace specdec::testing;

namespace {

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / ("specdec_models_" + name);
}

void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

ErrorCode code_of(const std::function<void()>& fn, std::string* what = nullptr) {
  try {
    fn();
  } catch (const Error& e) {
    if (what) *what = e.what();
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::ConfigError;
}

// Draft top-1 agreement along the target's greedy path.
double greedy_path_agreement(const ModelPair& pair, std::size_t n) {
  std::vector<TokenId> ctx;
  std::size_t agree = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const TokenId t = pair.target->distribution(ctx).argmax();
    agree += pair.draft->distribution(ctx).argmax() == t;
    ctx.push_back(t);
  }
  return static_cast<double>(agree) / static_cast<double>(n);
}

}  // namespace

TEST(Synthetic, Deterministic) {
  SyntheticParams sp;
  sp.seed = 11;
  const auto a = make_synthetic_pair(sp, {});
  const auto b = make_synthetic_pair(sp, {});
  const std::vector<TokenId> ctx{4, 8, 15, 16, 23, 42};
  EXPECT_EQ(a.target->distribution(ctx), a.target->distribution(ctx));
  EXPECT_EQ(a.target->distribution(ctx), b.target->distribution(ctx));
  EXPECT_EQ(a.draft->distribution(ctx), b.draft->distribution(ctx));
  EXPECT_EQ(a.target->distribution(ctx).size(), 4u);
}

TEST(Synthetic, DistributionsAreWellFormed) {
  std::mt19937_64 rng(12);
  for (std::size_t vocab : {4, 64, 256, 1024}) {
    SyntheticParams sp;
    sp.vocab_size = vocab;
    sp.seed = rng();
    const auto pair = make_synthetic_pair(sp, {0.5, 0.5, 1.5});
    for (int iter = 0; iter < 200; ++iter) {
      std::vector<TokenId> ctx(rng() % 40);
      for (auto& t : ctx) t = static_cast<TokenId>(rng() % vocab);
      for (const auto* m : {pair.target.get(), pair.draft.get()}) {
        const auto d = m->distribution(ctx);
        // The smallest vocabulary can run out of tail tokens.
        ASSERT_GE(d.size(), vocab > 4 ? 4u : 1u);
        ASSERT_LE(d.size(), 4u);
        double total = 0;
        for (const auto& e : d.entries()) {
          ASSERT_LT(e.token, vocab);
          total += e.prob;
        }
        ASSERT_LE(total, 1.0 + 1e-9);
        for (std::size_t i = 1; i < d.size(); ++i) ASSERT_LT(d[i].prob, d[i - 1].prob);
      }
    }
  }
}

TEST(Synthetic, PerfectAgreementOnRandomPrefixes) {
  std::mt19937_64 rng(13);
  SyntheticParams sp;
  sp.seed = 13;
  const auto pair = make_synthetic_pair(sp, {1.0, 0.7, 2.0});
  for (int iter = 0; iter < 100; ++iter) {
    std::vector<TokenId> ctx(rng() % 64);
    for (auto& t : ctx) t = static_cast<TokenId>(rng() % 256);
    ASSERT_EQ(pair.draft->distribution(ctx).argmax(), pair.target->distribution(ctx).argmax());
  }
}

TEST(Synthetic, NoAgreementWhenTopOneIsZero) {
  SyntheticParams sp;
  sp.seed = 14;
  EXPECT_DOUBLE_EQ(greedy_path_agreement(make_synthetic_pair(sp, {0.0, 0.7, 2.0}), 500), 0.0);
}

TEST(Synthetic, SeedFortyTwoAgreementCalibration) {
  SyntheticParams sp;
  sp.seed = 42;
  sp.vocab_size = 256;
  sp.horizon = 10100;
  const double a = greedy_path_agreement(make_synthetic_pair(sp, {0.9, 0.7, 2.0}), 10000);
  EXPECT_GE(a, 0.88);
  EXPECT_LE(a, 0.92);
}

TEST(Synthetic, AgreementWithinThreeSigmaAcrossSeeds) {
  // Unit bursts make the chain close to independent, so the binomial
  // standard error applies.
  const double p = 0.75;
  const std::size_t n = 2000;
  const double sigma = std::sqrt(p * (1 - p) / n);
  for (std::uint64_t seed = 100; seed < 120; ++seed) {
    SyntheticParams sp;
    sp.seed = seed;
    const double a = greedy_path_agreement(make_synthetic_pair(sp, {p, 0.7, 1.0}), n);
    EXPECT_NEAR(a, p, 3 * sigma) << "seed " << seed;
  }
}

TEST(Synthetic, RankTwoShareOnMisses) {
  SyntheticParams sp;
  sp.seed = 15;
  sp.horizon = 20100;
  const auto pair = make_synthetic_pair(sp, {0.6, 0.7, 2.0});
  std::vector<TokenId> ctx;
  std::size_t misses = 0, rank2 = 0;
  for (int i = 0; i < 20000; ++i) {
    const TokenId t = pair.target->distribution(ctx).argmax();
    const auto d = pair.draft->distribution(ctx);
    if (d.argmax() != t) {
      ++misses;
      rank2 += d.rank_of(t) == std::optional<std::size_t>(2);
    }
    ctx.push_back(t);
  }
  const double share = static_cast<double>(rank2) / static_cast<double>(misses);
  EXPECT_NEAR(share, 0.7, 4 * std::sqrt(0.21 / misses));
}

TEST(Synthetic, InfeasibleBurstIsStretched) {
  AgreementProfile p{0.2, 0.7, 1.0};
  EXPECT_DOUBLE_EQ(p.effective_burst_len(), 4.0);
  AgreementProfile q{0.9, 0.7, 2.0};
  EXPECT_DOUBLE_EQ(q.effective_burst_len(), 2.0);
  EXPECT_THROW((AgreementProfile{1.2, 0.5, 2.0}.validate()), Error);
  EXPECT_THROW((AgreementProfile{0.5, 0.5, 0.5}.validate()), Error);
}

TEST(Synthetic, RejectsBadParams) {
  SyntheticParams sp;
  sp.vocab_size = 3;
  EXPECT_EQ(code_of([&] { SyntheticTarget t(sp); }), ErrorCode::ConfigError);
}

TEST(Session, CountsCallsAndWidths) {
  SyntheticParams sp;
  const auto pair = make_synthetic_pair(sp, {});
  ModelSession s(*pair.target);
  s.next_distribution(std::vector<TokenId>{1, 2});
  const auto tree = tree_from_sequence(Sequence{{3, 4, 5}, 0});
  s.batch_distributions(tree, build_attention_mask(tree), {});
  EXPECT_EQ(s.counter().calls, 2u);
  EXPECT_EQ(s.counter().tokens, 4u);
  s.charge(7);
  EXPECT_EQ(s.counter().tokens, 11u);
}

TEST(Session, ChainBatchEqualsSequential) {
  SyntheticParams sp;
  sp.seed = 3;
  const auto pair = make_synthetic_pair(sp, {});
  ModelSession s(*pair.target);
  const std::vector<TokenId> prefix{9, 9};
  const auto tree = tree_from_sequence(Sequence{{3, 4, 5}, 2});
  const auto batch = s.batch_distributions(tree, build_attention_mask(tree), prefix);
  ASSERT_EQ(batch.size(), 3u);
  EXPECT_EQ(batch[0], pair.target->distribution(std::vector<TokenId>{9, 9, 3}));
  EXPECT_EQ(batch[2], pair.target->distribution(std::vector<TokenId>{9, 9, 3, 4, 5}));
}

TEST(Session, SiblingsAreIndependentOfOrder) {
  SyntheticParams sp;
  sp.seed = 4;
  const auto pair = make_synthetic_pair(sp, {});
  auto build = [](bool swap) {
    DraftTree t(0);
    const NodeId r = t.add_node(1, kNoNode, 0.9, Origin::Trunk);
    t.add_node(swap ? 3 : 2, r, 0.9, Origin::Trunk);
    t.add_node(swap ? 2 : 3, r, 0.5, Origin::Branch);
    return t;
  };
  ModelSession s(*pair.target);
  const auto a = build(false), b = build(true);
  const auto da = s.batch_distributions(a, build_attention_mask(a), {});
  const auto db = s.batch_distributions(b, build_attention_mask(b), {});
  EXPECT_EQ(da[1], db[2]);
  EXPECT_EQ(da[2], db[1]);
}

TEST(Session, BatchMatchesSequentialOnRandomTrees) {
  std::mt19937_64 rng(16);
  SyntheticParams sp;
  sp.vocab_size = 8;
  sp.seed = 16;
  const auto pair = make_synthetic_pair(sp, {0.7, 0.7, 2.0});
  for (int iter = 0; iter < 200; ++iter) {
    const std::size_t n = 1 + rng() % 16;
    std::vector<TokenId> tokens(n);
    for (auto& t : tokens) t = static_cast<TokenId>(rng() % 8);
    auto order = identity_order(n);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<TokenId> prefix(rng() % 6);
    for (auto& t : prefix) t = static_cast<TokenId>(rng() % 8);
    const auto tree = tree_from_parents(random_parents(rng, n), tokens, prefix.size(), order);
    for (const auto* m : {pair.target.get(), pair.draft.get()}) {
      ModelSession s(*m);
      const auto batch = s.batch_distributions(tree, build_attention_mask(tree), prefix);
      ASSERT_EQ(s.counter().calls, 1u);
      ASSERT_EQ(s.counter().tokens, n);
      for (std::size_t i = 0; i < n; ++i) {
        std::vector<TokenId> ctx = prefix;
        std::vector<TokenId> chain;
        for (NodeId cur = static_cast<NodeId>(i); cur != kNoNode; cur = tree.node(cur).parent) {
          chain.insert(chain.begin(), tree.node(cur).token);
        }
        ctx.insert(ctx.end(), chain.begin(), chain.end());
        ASSERT_EQ(batch[i], m->distribution(ctx));
      }
    }
  }
}

TEST(Session, MaskSizeMismatch) {
  SyntheticParams sp;
  const auto pair = make_synthetic_pair(sp, {});
  ModelSession s(*pair.target);
  const auto tree = tree_from_sequence(Sequence{{3, 4}, 0});
  EXPECT_EQ(code_of([&] { s.batch_distributions(tree, AttentionMask(3), {}); }),
            ErrorCode::MaskMismatch);
}

TEST(Trace, ReplaysThreeRecords) {
  const auto p = temp_file("three.jsonl");
  write_text(p,
             "{\"position\":0,\"topk\":[[5,0.7],[2,0.2]]}\n"
             "{\"position\":1,\"topk\":[[6,0.9]]}\n"
             "{\"position\":2,\"topk\":[[0,0.6],[1,0.3]]}\n");
  const auto t = load_trace(p);
  EXPECT_EQ(t->eos(), 0u);
  EXPECT_EQ(t->vocab_size(), 7u);
  EXPECT_EQ(t->top_k(), 2u);
  std::vector<TokenId> out;
  while (out.size() < 3) out.push_back(t->distribution(out).argmax());
  EXPECT_EQ(out, (std::vector<TokenId>{5, 6, 0}));
  EXPECT_EQ(code_of([&] { t->distribution(std::vector<TokenId>{5, 7}); }), ErrorCode::TraceDiverged);
  EXPECT_EQ(code_of([&] { t->distribution(std::vector<TokenId>{5, 6, 0}); }),
            ErrorCode::TraceExhausted);
}

TEST(Trace, WriteReadRoundTrip) {
  std::vector<Distribution> records{dist({{3, 0.5}, {1, 0.25}}), dist({{0, 1.0 / 3.0}})};
  const auto p = temp_file("roundtrip.jsonl");
  write_trace(p, records);
  EXPECT_EQ(read_trace_records(p), records);
}

TEST(Trace, ParseErrorsCarryLineNumbers) {
  const auto p = temp_file("bad.jsonl");
  std::string what;
  write_text(p, "");
  EXPECT_EQ(code_of([&] { read_trace_records(p); }), ErrorCode::TraceParseError);

  write_text(p, "{\"position\":0,\"topk\":[[1,0.5]]}\nnot json\n");
  EXPECT_EQ(code_of([&] { read_trace_records(p); }, &what), ErrorCode::TraceParseError);
  EXPECT_NE(what.find(":2:"), std::string::npos) << what;

  write_text(p, "{\"position\":0,\"topk\":[[1,0.5]]}\n{\"position\":2,\"topk\":[[1,0.5]]}\n");
  EXPECT_EQ(code_of([&] { read_trace_records(p); }, &what), ErrorCode::TraceParseError);
  EXPECT_NE(what.find(":2:"), std::string::npos) << what;

  write_text(p, "{\"position\":0,\"topk\":[[1,1.5]]}\n");
  EXPECT_EQ(code_of([&] { read_trace_records(p); }), ErrorCode::TraceParseError);

  EXPECT_EQ(code_of([&] { read_trace_records(temp_file("missing.jsonl")); }), ErrorCode::IoError);
}

TEST(Trace, CheckedInFixtureLoads) {
  const char* dir = std::getenv("SPECDEC_TEST_DATA");
  ASSERT_NE(dir, nullptr);
  const auto pair = load_trace_pair(std::filesystem::path(dir) / "small.target.jsonl",
                                    std::filesystem::path(dir) / "small.draft.jsonl");
  const auto& target = static_cast<const TraceModel&>(*pair.target);
  EXPECT_EQ(target.records().size(), 40u);
  EXPECT_EQ(target.eos(), kEosToken);
}
