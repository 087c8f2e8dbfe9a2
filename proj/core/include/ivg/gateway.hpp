#pragma once

// Text-to-image generation behind one interface: a deterministic stub for
// tests and offline use, and an HTTP adapter for txt2img-style servers.

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ivg/hashing.hpp"

namespace ivg {

struct GenerationRequest {
  std::string prompt;
  int n = 1;
  std::int64_t seed = 0;
  int width = 512;
  int height = 512;
};

enum class GenerationErrorKind { invalid_request, unavailable, bad_response };

class GenerationError : public std::runtime_error {
 public:
  GenerationError(GenerationErrorKind kind, const std::string& what,
                  std::optional<int> retry_after_seconds = std::nullopt)
      : std::runtime_error(what), kind_(kind), retry_after_(retry_after_seconds) {}

  GenerationErrorKind kind() const { return kind_; }
  std::optional<int> retry_after_seconds() const { return retry_after_; }

 private:
  GenerationErrorKind kind_;
  std::optional<int> retry_after_;
};

inline constexpr int kDefaultMaxBatch = 8;

// Throws GenerationError(invalid_request) for n outside [1, max_batch] or
// dimensions that are not positive multiples of 8.
void validate_request(const GenerationRequest& request, int max_batch = kDefaultMaxBatch);

class GenerationBackend {
 public:
  virtual ~GenerationBackend() = default;
  // PNG bytes, one per requested image.
  virtual std::vector<Bytes> generate(const GenerationRequest& request) = 0;
  virtual std::string model_tag() const = 0;
};

// Seeded colour-field PNG; a pure function of (prompt, seed, index, size).
Bytes render_stub_image(const std::string& prompt, std::int64_t seed, int index, int width, int height);

class StubBackend final : public GenerationBackend {
 public:
  std::vector<Bytes> generate(const GenerationRequest& request) override;
  std::string model_tag() const override { return "stub"; }
};

// POST <url>/sdapi/v1/txt2img with {prompt, seed, batch_size, n_iter, width,
// height}; expects {"images": [base64 PNG, ...]}.
class Txt2ImgHttpBackend final : public GenerationBackend {
 public:
  Txt2ImgHttpBackend(std::string base_url, double timeout_seconds);
  std::vector<Bytes> generate(const GenerationRequest& request) override;
  std::string model_tag() const override { return "txt2img:" + base_url_; }

 private:
  std::string base_url_;
  double timeout_seconds_;
};

struct GatewayConfig {
  std::string mode = "stub";  // "stub" | "real"
  std::string url = "http://127.0.0.1:7860";
  double timeout_seconds = 120.0;
  int max_batch = kDefaultMaxBatch;
};

std::unique_ptr<GenerationBackend> make_backend(const GatewayConfig& config);

// Validates and dispatches requests; checks the backend returned n images.
class GenerationGateway {
 public:
  GenerationGateway(std::shared_ptr<GenerationBackend> backend, int max_batch = kDefaultMaxBatch)
      : backend_(std::move(backend)), max_batch_(max_batch) {}

  std::vector<Bytes> generate(const GenerationRequest& request) const;
  std::string model_tag() const { return backend_->model_tag(); }

 private:
  std::shared_ptr<GenerationBackend> backend_;
  int max_batch_;
};

}  // namespace ivg
