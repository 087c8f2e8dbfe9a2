#pragma once

// Dual text/image embeddings for generated images.

#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ivg/hashing.hpp"

namespace ivg {

using Vector = std::vector<double>;

inline constexpr std::size_t kEmbeddingDim = 512;

struct PairEmbedding {
  std::string image_id;
  Vector text_vec;
  Vector image_vec;
};

struct EmbeddingRecord {
  std::string image_id;
  std::string prompt;
  std::shared_ptr<const Bytes> image;
};

struct EmbeddingBatch {
  std::vector<Vector> text_vecs;
  std::vector<Vector> image_vecs;
};

class EmbeddingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Contract: deterministic, finite, unit-norm vectors of dimension().
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual std::size_t dimension() const = 0;
  // Throws EmbeddingError when the provider cannot serve the batch.
  virtual EmbeddingBatch embed(const std::vector<std::string>& texts,
                               const std::vector<std::shared_ptr<const Bytes>>& images) = 0;
};

// text_vec: normalized sum of per-word hash-seeded unit vectors.
// image_vec: hash-seeded unit vector of the image bytes.
class StubEmbeddingProvider final : public EmbeddingProvider {
 public:
  explicit StubEmbeddingProvider(std::size_t dimension = kEmbeddingDim) : dimension_(dimension) {}

  std::size_t dimension() const override { return dimension_; }
  EmbeddingBatch embed(const std::vector<std::string>& texts,
                       const std::vector<std::shared_ptr<const Bytes>>& images) override;

  Vector text_vector(const std::string& prompt) const;
  Vector image_vector(std::span<const std::uint8_t> bytes) const;

 private:
  std::size_t dimension_;
};

// Unit vector with components drawn from a 64-bit seed; platform independent.
Vector seeded_unit_vector(std::uint64_t seed, std::size_t dimension);

double cosine_similarity(const Vector& a, const Vector& b);

// Thread-safe content-hash keyed cache of embedding vectors.
class EmbeddingCache {
 public:
  std::optional<Vector> find(const std::string& key) const;
  void insert(const std::string& key, Vector value);
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, Vector> entries_;
};

struct EmbedOptions {
  // Substitute stub vectors for records the provider failed on.
  bool allow_degraded = false;
  std::size_t batch_size = 32;
  std::size_t max_concurrency = 4;
};

struct RecordError {
  std::string image_id;
  std::string message;
};

struct EmbedResult {
  std::vector<PairEmbedding> embeddings;  // same order as the input records
  std::vector<RecordError> errors;
  bool degraded = false;

  bool ok() const { return errors.empty() || degraded; }
};

// Embeds each record's prompt and image. Vectors are cached by content
// hash, so duplicate prompts or image bytes hit the provider once.
// Without allow_degraded, any record error leaves `embeddings` empty.
EmbedResult embed_records(const std::vector<EmbeddingRecord>& records, EmbeddingProvider& provider,
                          EmbeddingCache* cache = nullptr, const EmbedOptions& options = {});

}  // namespace ivg
