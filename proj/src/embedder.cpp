#include "tcgen/embedder.hpp"

#include <cctype>
#include <cmath>
#include <fstream>

#include <json.hpp>

#include "tcgen/error.hpp"
#include "tcgen/random.hpp"

namespace tcgen {

namespace {

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

void normalize(std::vector<double>& v) {
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm > 0.0)
    for (double& x : v) x /= norm;
}

}  // namespace

std::vector<std::string> whitespace_tokens(std::string_view text) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < text.size()) {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
    std::size_t j = i;
    while (j < text.size() && !std::isspace(static_cast<unsigned char>(text[j]))) ++j;
    if (j > i) out.emplace_back(text.substr(i, j - i));
    i = j;
  }
  return out;
}

StubEmbedder::StubEmbedder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {
  if (dim == 0) throw Error(ErrorCode::kEmbedderFailure, "embedding dimension must be > 0");
}

std::vector<double> StubEmbedder::token_vector(std::string_view token) const {
  Rng rng(derive_seed(seed_, fnv1a(token)));
  std::vector<double> v(dim_);
  for (double& x : v) x = rng.normal();
  normalize(v);
  return v;
}

std::vector<double> StubEmbedder::embed(std::string_view text) const {
  const auto tokens = whitespace_tokens(text);
  if (tokens.empty())
    throw Error(ErrorCode::kEmbedderFailure, "cannot embed empty text");
  std::vector<double> sum(dim_, 0.0);
  for (const auto& t : tokens) {
    const auto v = token_vector(t);
    for (std::size_t i = 0; i < dim_; ++i) sum[i] += v[i];
  }
  for (double& x : sum) x /= static_cast<double>(tokens.size());
  normalize(sum);
  return sum;
}

FileEmbedder FileEmbedder::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open embeddings " + path.string());
  FileEmbedder e;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      auto text = j.at("text").get<std::string>();
      auto vec = j.at("vector").get<std::vector<double>>();
      if (vec.empty()) throw Error(ErrorCode::kSchemaViolation, "empty vector", lineno);
      if (e.dim_ == 0) e.dim_ = vec.size();
      if (vec.size() != e.dim_)
        throw Error(ErrorCode::kSchemaViolation,
                    "vector has dimension " + std::to_string(vec.size()) + ", expected " +
                        std::to_string(e.dim_),
                    lineno);
      e.table_[std::move(text)] = std::move(vec);
    } catch (const nlohmann::json::exception& ex) {
      throw Error(ErrorCode::kSchemaViolation, path.string() + ": " + ex.what(), lineno);
    }
  }
  if (e.dim_ == 0) throw Error(ErrorCode::kSchemaViolation, path.string() + ": no embeddings");
  return e;
}

std::vector<double> FileEmbedder::embed(std::string_view text) const {
  auto it = table_.find(std::string(text));
  if (it == table_.end())
    throw Error(ErrorCode::kEmbedderFailure, "no precomputed embedding for '" + std::string(text) + "'");
  return it->second;
}

std::vector<double> caption_features(std::string_view caption, const Embedder& embedder,
                                     std::size_t* tokens) {
  const auto words = whitespace_tokens(caption);
  if (words.empty())
    throw Error(ErrorCode::kEmbedderFailure, "cannot embed empty caption");
  std::vector<double> out;
  out.reserve(words.size() * embedder.dim());
  for (const auto& w : words) {
    const auto v = embedder.embed(w);
    out.insert(out.end(), v.begin(), v.end());
  }
  if (tokens) *tokens = words.size();
  return out;
}

}  // namespace tcgen
