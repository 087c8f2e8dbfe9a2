#pragma once

#include <string>

#include "ivg/embedding.hpp"

namespace ivg {

// POST <url> with {"texts": [...], "images": [base64 PNG, ...]}; expects
// {"text_vecs": [[...]], "image_vecs": [[...]]} in request order.
class HttpEmbeddingProvider final : public EmbeddingProvider {
 public:
  HttpEmbeddingProvider(std::string url, double timeout_seconds, std::size_t dimension = kEmbeddingDim);

  std::size_t dimension() const override { return dimension_; }
  EmbeddingBatch embed(const std::vector<std::string>& texts,
                       const std::vector<std::shared_ptr<const Bytes>>& images) override;

 private:
  std::string url_;
  double timeout_seconds_;
  std::size_t dimension_;
};

}  // namespace ivg
