#include <algorithm>
#include <cstdio>
#include <fstream>
#include <string>

#include <json.hpp>

#include "specdec/models.hpp"

namespace specdec {

TraceModel::TraceModel(std::vector<Distribution> records, std::vector<TokenId> path,
                       std::size_t vocab_size)
    : records_(std::move(records)), path_(std::move(path)), vocab_size_(vocab_size) {
  if (records_.empty()) throw Error(ErrorCode::TraceParseError, "trace has no records");
  if (path_.size() < records_.size()) {
    throw Error(ErrorCode::TraceParseError, "replay path shorter than trace");
  }
}

std::size_t TraceModel::top_k() const noexcept {
  std::size_t k = 0;
  for (const auto& r : records_) k = std::max(k, r.size());
  return k;
}

Distribution TraceModel::distribution(std::span<const TokenId> context) const {
  const std::size_t position = context.size();
  if (position >= records_.size()) {
    throw Error(ErrorCode::TraceExhausted,
                "position " + std::to_string(position) + " past end of trace");
  }
  for (std::size_t i = 0; i < position; ++i) {
    if (context[i] != path_[i]) {
      throw Error(ErrorCode::TraceDiverged, "context leaves the recorded path at position " +
                                                std::to_string(i));
    }
  }
  return records_[position];
}

TokenId TraceModel::eos() const { return records_.back().argmax(); }

void write_trace(const std::filesystem::path& path, std::span<const Distribution> records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  char buf[64];
  for (std::size_t p = 0; p < records.size(); ++p) {
    out << "{\"position\":" << p << ",\"topk\":[";
    const auto entries = records[p].entries();
    for (std::size_t i = 0; i < entries.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", entries[i].prob);
      out << (i ? "," : "") << '[' << entries[i].token << ',' << buf << ']';
    }
    out << "]}\n";
  }
  if (!out) throw Error(ErrorCode::IoError, "write failed for " + path.string());
}

std::vector<Distribution> read_trace_records(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot open " + path.string());
  std::vector<Distribution> records;
  std::string line;
  std::size_t line_no = 0;
  auto fail = [&](const std::string& why) -> Error {
    return Error(ErrorCode::TraceParseError,
                 path.string() + ":" + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw fail(e.what());
    }
    if (!obj.is_object() || !obj.contains("position") || !obj.contains("topk") ||
        !obj["position"].is_number_unsigned() || !obj["topk"].is_array()) {
      throw fail("expected {\"position\":N,\"topk\":[[token,prob],...]}");
    }
    if (obj["position"].get<std::size_t>() != records.size()) {
      throw fail("positions must be consecutive from 0");
    }
    std::vector<TokenProb> entries;
    for (const auto& pair : obj["topk"]) {
      if (!pair.is_array() || pair.size() != 2 || !pair[0].is_number_unsigned() ||
          !pair[1].is_number()) {
        throw fail("topk entries must be [token, prob]");
      }
      entries.push_back({pair[0].get<TokenId>(), pair[1].get<double>()});
    }
    if (entries.empty()) throw fail("empty topk");
    try {
      records.emplace_back(std::move(entries));
    } catch (const Error& e) {
      throw fail(e.what());
    }
  }
  if (records.empty()) {
    ++line_no;
    throw fail("trace is empty");
  }
  return records;
}

namespace {

std::size_t infer_vocab(std::span<const Distribution> a, std::span<const Distribution> b = {}) {
  TokenId hi = 0;
  for (auto recs : {a, b}) {
    for (const auto& r : recs) {
      for (const auto& e : r.entries()) hi = std::max(hi, e.token);
    }
  }
  return std::max<std::size_t>(4, static_cast<std::size_t>(hi) + 1);
}

std::vector<TokenId> argmax_path(std::span<const Distribution> records) {
  std::vector<TokenId> path;
  path.reserve(records.size());
  for (const auto& r : records) path.push_back(r.argmax());
  return path;
}

}  // namespace

std::shared_ptr<const TraceModel> load_trace(const std::filesystem::path& path,
                                             std::optional<std::size_t> vocab_size) {
  auto records = read_trace_records(path);
  auto own_path = argmax_path(records);
  const std::size_t vocab = vocab_size.value_or(infer_vocab(records));
  return std::make_shared<TraceModel>(std::move(records), std::move(own_path), vocab);
}

ModelPair load_trace_pair(const std::filesystem::path& target_path,
                          const std::filesystem::path& draft_path,
                          std::optional<std::size_t> vocab_size) {
  auto target_records = read_trace_records(target_path);
  auto draft_records = read_trace_records(draft_path);
  if (draft_records.size() != target_records.size()) {
    throw Error(ErrorCode::TraceParseError, "draft and target traces differ in length");
  }
  const std::size_t vocab = vocab_size.value_or(infer_vocab(target_records, draft_records));
  auto path = argmax_path(target_records);
  auto draft = std::make_shared<TraceModel>(std::move(draft_records), path, vocab);
  auto target = std::make_shared<TraceModel>(std::move(target_records), std::move(path), vocab);
  return {std::move(target), std::move(draft)};
}

}  // namespace specdec
