#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tcgen {

/// Text -> R^C feature extractor. Implementations are deterministic and
/// must be safe to call concurrently.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::size_t dim() const = 0;
  virtual std::vector<double> embed(std::string_view text) const = 0;
};

/// Dependency-free stand-in for a pretrained text encoder: each whitespace
/// token hashes to a seeded pseudo-random unit vector; a text is the mean of
/// its token vectors, renormalized to unit L2 norm.
class StubEmbedder final : public Embedder {
 public:
  explicit StubEmbedder(std::size_t dim, std::uint64_t seed = 0x7463676Eull);

  std::size_t dim() const override { return dim_; }
  std::vector<double> embed(std::string_view text) const override;
  std::vector<double> token_vector(std::string_view token) const;

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

/// Precomputed embeddings from a JSONL file of {"text": ..., "vector": [...]}.
/// A text missing from the file is an error, never a fallback.
class FileEmbedder final : public Embedder {
 public:
  static FileEmbedder load(const std::filesystem::path& path);

  std::size_t dim() const override { return dim_; }
  std::vector<double> embed(std::string_view text) const override;

 private:
  std::size_t dim_ = 0;
  std::unordered_map<std::string, std::vector<double>> table_;
};

std::vector<std::string> whitespace_tokens(std::string_view text);

/// Per-token caption features (L x C, row-major), the sequence the model
/// cross-attends to. Each token is embedded on its own.
std::vector<double> caption_features(std::string_view caption, const Embedder& embedder,
                                     std::size_t* tokens = nullptr);

}  // namespace tcgen
