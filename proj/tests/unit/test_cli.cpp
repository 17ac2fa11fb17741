#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "specdec/cli.hpp"
#include "specdec/models.hpp"

using namespace specdec;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "specdec_cli_test";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::stringstream lines(text);
  std::string line;
  while (std::getline(lines, line)) {
    std::vector<std::string> cells;
    std::stringstream cs(line);
    std::string cell;
    while (std::getline(cs, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

}  // namespace

TEST(Cli, GenTraceIsByteIdenticalAcrossRuns) {
  const auto a = scratch("a").string(), b = scratch("b").string();
  ASSERT_EQ(run({"gen-trace", "--len", "300", "--seed", "3", "--out", a}).code, 0);
  ASSERT_EQ(run({"gen-trace", "--len", "300", "--seed", "3", "--out", b}).code, 0);
  EXPECT_EQ(slurp(a + ".target.jsonl"), slurp(b + ".target.jsonl"));
  EXPECT_EQ(slurp(a + ".draft.jsonl"), slurp(b + ".draft.jsonl"));
  auto ma = slurp(a + ".manifest.json"), mb = slurp(b + ".manifest.json");
  // The manifests only differ in the file names they point at.
  EXPECT_EQ(nlohmann::json::parse(ma)["realized"], nlohmann::json::parse(mb)["realized"]);
}

TEST(Cli, GenTracePerfectAgreement) {
  const auto p = scratch("perfect").string();
  ASSERT_EQ(run({"gen-trace", "--len", "100", "--p-top1", "1.0", "--out", p}).code, 0);
  const auto t = read_trace_records(p + ".target.jsonl");
  const auto d = read_trace_records(p + ".draft.jsonl");
  ASSERT_EQ(t.size(), 100u);
  for (std::size_t i = 0; i < t.size(); ++i) EXPECT_EQ(t[i].argmax(), d[i].argmax());
  EXPECT_EQ(t.back().argmax(), kEosToken);
}

TEST(Cli, ManifestAgreementMatchesReplay) {
  const auto p = scratch("replay").string();
  ASSERT_EQ(run({"gen-trace", "--len", "2000", "--seed", "9", "--out", p}).code, 0);
  const auto pair = load_trace_pair(p + ".target.jsonl", p + ".draft.jsonl");
  const auto& target = static_cast<const TraceModel&>(*pair.target);
  std::vector<TokenId> ctx;
  std::size_t agree = 0;
  for (TokenId t : target.path()) {
    agree += pair.draft->distribution(ctx).argmax() == t;
    ctx.push_back(t);
  }
  const auto manifest = nlohmann::json::parse(slurp(p + ".manifest.json"));
  EXPECT_EQ(manifest["realized"]["top1_agreement"].get<double>(),
            static_cast<double>(agree) / static_cast<double>(target.path().size()));
  EXPECT_EQ(manifest["records"].get<std::size_t>(), 2000u);
}

TEST(Cli, LongTraceAgreementCalibration) {
  const auto p = scratch("long").string();
  ASSERT_EQ(run({"gen-trace", "--len", "10000", "--seed", "42", "--p-top1", "0.9", "--out", p}).code, 0);
  const double a = nlohmann::json::parse(slurp(p + ".manifest.json"))["realized"]["top1_agreement"];
  EXPECT_GE(a, 0.88);
  EXPECT_LE(a, 0.92);
}

TEST(Cli, RunOnTracePair) {
  const auto p = scratch("pair").string();
  ASSERT_EQ(run({"gen-trace", "--len", "120", "--out", p}).code, 0);
  const auto r = run({"run", "--target-trace", p + ".target.jsonl", "--draft-trace", p + ".draft.jsonl",
                      "--strategies", "ar,baseline"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = csv_rows(r.out);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_EQ(rows[1][0], "ar");
  EXPECT_EQ(rows[2][0], "baseline");
  EXPECT_EQ(rows[1][11], "120");
  EXPECT_EQ(rows[2][11], "120");
}

TEST(Cli, ConfigErrorsExitWithOne) {
  EXPECT_EQ(run({"run", "--draft-len", "0"}).code, 1);
  EXPECT_EQ(run({"run", "--strategies", "nope"}).code, 1);
  EXPECT_EQ(run({"run", "--p-top1", "1.5"}).code, 1);
  EXPECT_EQ(run({"run", "--cost-preset", "3to1"}).code, 1);
  EXPECT_EQ(run({"frobnicate"}).code, 1);
  EXPECT_EQ(run({"sweep", "--var", "tau"}).code, 1);
  EXPECT_EQ(run({"run", "--target-trace", scratch("absent.jsonl").string(), "--draft-trace",
                 scratch("absent2.jsonl").string()})
                .code,
            1);
  EXPECT_EQ(run({"gen-trace", "--out", "/proc/nonexistent/dir/x"}).code, 1);
  EXPECT_EQ(run({"--help"}).code, 0);
}

TEST(Cli, RunRowsAreOrderedAndDeterministic) {
  const std::vector<std::string> args{"run", "--len", "60", "--repeats", "3", "--seed", "11"};
  const auto a = run(args), b = run(args);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  const auto rows = csv_rows(a.out);
  ASSERT_EQ(rows.size(), 1u + 5 * 3);
  EXPECT_EQ(rows[1][0], "ar");
  EXPECT_EQ(rows[1][1], "11");
  EXPECT_EQ(rows[3][1], "13");
  EXPECT_EQ(rows[4][0], "baseline");
  EXPECT_EQ(rows[15][0], "tsp");
  for (std::size_t i = 1; i < rows.size(); ++i) EXPECT_EQ(rows[i][11], "60");
}

TEST(Cli, SweepZeroThresholdEqualsLongBaseline) {
  const auto sweep = run({"sweep", "--var", "tau", "--grid", "0", "--len", "120", "--repeats", "2"});
  const auto base = run({"run", "--strategies", "baseline", "--draft-len", "24", "--len", "120",
                         "--repeats", "2"});
  ASSERT_EQ(sweep.code, 0) << sweep.err;
  ASSERT_EQ(base.code, 0) << base.err;
  const auto s = csv_rows(sweep.out), b = csv_rows(base.out);
  ASSERT_EQ(s.size(), 3u);
  ASSERT_EQ(b.size(), 3u);
  for (std::size_t r = 1; r < 3; ++r) {
    // Everything from draft_len on matches.
    for (std::size_t c = 5; c < s[r].size(); ++c) EXPECT_EQ(s[r][c], b[r][c]) << "column " << c;
  }
}

TEST(Cli, SweepThresholdTrend) {
  const auto r = run({"sweep", "--var", "tau", "--grid", "0,0.2,0.4,0.6,0.8", "--len", "200",
                      "--repeats", "10", "--summary-out", scratch("trend.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto rows = csv_rows(slurp(scratch("trend.csv")));
  ASSERT_EQ(rows.size(), 6u);
  for (std::size_t i = 2; i < rows.size(); ++i) {
    EXPECT_LE(std::stod(rows[i][5]), std::stod(rows[i - 1][5]));  // draft_steps
    EXPECT_GE(std::stod(rows[i][6]), std::stod(rows[i - 1][6]));  // target_rounds
  }
}

TEST(Cli, RankAnalysisFavoursRankTwo) {
  const auto ranks = scratch("ranks.csv");
  const auto r = run({"run", "--strategies", "baseline", "--len", "200", "--repeats", "20",
                      "--rank-out", ranks.string(), "--out", scratch("ranks_rows.csv").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  double rank2 = -1;
  for (const auto& row : csv_rows(slurp(ranks))) {
    if (row.size() == 4 && row[0] == "baseline" && row[1] == "2") rank2 = std::stod(row[3]);
  }
  EXPECT_GE(rank2, 0.7 - 0.05);
}

TEST(Cli, SeedFromEnvironmentAndConfigFile) {
  ::setenv("SPECASR_SEED", "21", 1);
  const auto env = run({"run", "--strategies", "ar", "--len", "10"});
  ::unsetenv("SPECASR_SEED");
  ASSERT_EQ(env.code, 0);
  EXPECT_EQ(csv_rows(env.out)[1][1], "21");

  ::setenv("SPECASR_SEED", "x", 1);
  EXPECT_EQ(run({"run", "--strategies", "ar", "--len", "10"}).code, 1);
  ::unsetenv("SPECASR_SEED");

  const auto cfg = scratch("run.toml");
  std::ofstream(cfg) << "seed = 5\ntau = 0.6\n";
  const auto from_file = run({"run", "--config", cfg.string(), "--strategies", "asp", "--len", "10"});
  ASSERT_EQ(from_file.code, 0) << from_file.err;
  EXPECT_EQ(csv_rows(from_file.out)[1][1], "5");
  EXPECT_EQ(csv_rows(from_file.out)[1][4], "0.6000");
  const auto flag_wins = run({"run", "--config", cfg.string(), "--strategies", "asp", "--len", "10",
                              "--seed", "8"});
  ASSERT_EQ(flag_wins.code, 0) << flag_wins.err;
  EXPECT_EQ(csv_rows(flag_wins.out)[1][1], "8");
}

TEST(Cli, AblateWritesFile) {
  const auto out = scratch("ablate.csv");
  const auto r = run({"ablate", "--len", "50", "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  EXPECT_EQ(csv_rows(slurp(out)).size(), 6u);
}
