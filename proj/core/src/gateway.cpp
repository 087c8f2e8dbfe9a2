#include "ivg/gateway.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <httplib.h>
#include <json.hpp>

#include "ivg/http_url.hpp"
#include "ivg/png.hpp"

namespace ivg {

using nlohmann::json;

void validate_request(const GenerationRequest& request, int max_batch) {
  if (request.n < 1 || request.n > max_batch) {
    throw GenerationError(GenerationErrorKind::invalid_request,
                          "batch size must be in [1, " + std::to_string(max_batch) + "]");
  }
  if (request.width <= 0 || request.height <= 0 || request.width % 8 || request.height % 8) {
    throw GenerationError(GenerationErrorKind::invalid_request,
                          "image dimensions must be positive multiples of 8");
  }
}

Bytes render_stub_image(const std::string& prompt, std::int64_t seed, int index, int width, int height) {
  const std::string key = prompt + "\x1f" + std::to_string(seed) + "\x1f" + std::to_string(index) +
                          "\x1f" + std::to_string(width) + "x" + std::to_string(height);
  std::mt19937_64 rng(stable_seed(key));
  auto unit = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };

  double corner[4][3];
  for (auto& c : corner) {
    for (double& ch : c) ch = 255.0 * unit();
  }
  struct Blob {
    double cx, cy, radius, rgb[3];
  };
  Blob blobs[3];
  for (auto& b : blobs) {
    b.cx = unit() * width;
    b.cy = unit() * height;
    b.radius = (0.15 + 0.35 * unit()) * std::min(width, height);
    for (double& ch : b.rgb) ch = 255.0 * unit();
  }

  std::vector<std::uint8_t> rgb(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
  std::size_t at = 0;
  for (int y = 0; y < height; ++y) {
    const double v = height > 1 ? static_cast<double>(y) / (height - 1) : 0.0;
    for (int x = 0; x < width; ++x) {
      const double u = width > 1 ? static_cast<double>(x) / (width - 1) : 0.0;
      double blend[3];
      for (int k = 0; k < 3; ++k) {
        const double dx = x - blobs[k].cx, dy = y - blobs[k].cy;
        blend[k] = std::exp(-(dx * dx + dy * dy) / (2 * blobs[k].radius * blobs[k].radius));
      }
      for (int ch = 0; ch < 3; ++ch) {
        double value = (1 - u) * (1 - v) * corner[0][ch] + u * (1 - v) * corner[1][ch] +
                       (1 - u) * v * corner[2][ch] + u * v * corner[3][ch];
        for (int k = 0; k < 3; ++k) value = (1 - blend[k]) * value + blend[k] * blobs[k].rgb[ch];
        rgb[at++] = static_cast<std::uint8_t>(std::clamp(value, 0.0, 255.0));
      }
    }
  }
  return encode_png_rgb(width, height, rgb);
}

std::vector<Bytes> StubBackend::generate(const GenerationRequest& request) {
  std::vector<Bytes> out;
  out.reserve(static_cast<std::size_t>(request.n));
  for (int i = 0; i < request.n; ++i) {
    out.push_back(render_stub_image(request.prompt, request.seed, i, request.width, request.height));
  }
  return out;
}

Txt2ImgHttpBackend::Txt2ImgHttpBackend(std::string base_url, double timeout_seconds)
    : base_url_(std::move(base_url)), timeout_seconds_(timeout_seconds) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

std::vector<Bytes> Txt2ImgHttpBackend::generate(const GenerationRequest& request) {
  const HttpUrl url = split_url(base_url_);
  httplib::Client client(url.origin);
  const auto secs = static_cast<time_t>(timeout_seconds_);
  const auto usecs = static_cast<time_t>((timeout_seconds_ - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  const json body = {{"prompt", request.prompt}, {"seed", request.seed},  {"batch_size", request.n},
                     {"n_iter", 1},              {"width", request.width}, {"height", request.height}};
  const std::string path = (url.path == "/" ? std::string() : url.path) + "/sdapi/v1/txt2img";
  auto res = client.Post(path, body.dump(), "application/json");
  if (!res) {
    throw GenerationError(GenerationErrorKind::unavailable,
                          "backend unreachable: " + httplib::to_string(res.error()), 5);
  }
  if (res->status >= 500 || res->status == 429) {
    std::optional<int> retry = 5;
    if (res->has_header("Retry-After")) {
      try {
        retry = std::stoi(res->get_header_value("Retry-After"));
      } catch (const std::exception&) {
      }
    }
    throw GenerationError(GenerationErrorKind::unavailable,
                          "backend returned HTTP " + std::to_string(res->status), retry);
  }
  if (res->status != 200) {
    throw GenerationError(GenerationErrorKind::bad_response,
                          "backend returned HTTP " + std::to_string(res->status));
  }
  const json reply = json::parse(res->body, nullptr, false);
  if (reply.is_discarded() || !reply.contains("images") || !reply["images"].is_array()) {
    throw GenerationError(GenerationErrorKind::bad_response, "backend reply has no images array");
  }
  std::vector<Bytes> images;
  for (const auto& encoded : reply["images"]) {
    if (!encoded.is_string()) {
      throw GenerationError(GenerationErrorKind::bad_response, "image entry is not a string");
    }
    try {
      images.push_back(base64_decode(encoded.get<std::string>()));
    } catch (const std::invalid_argument& e) {
      throw GenerationError(GenerationErrorKind::bad_response, e.what());
    }
    if (!read_png_info(images.back())) {
      throw GenerationError(GenerationErrorKind::bad_response, "backend image is not a PNG");
    }
  }
  return images;
}

std::unique_ptr<GenerationBackend> make_backend(const GatewayConfig& config) {
  if (config.mode == "stub") return std::make_unique<StubBackend>();
  if (config.mode == "real") return std::make_unique<Txt2ImgHttpBackend>(config.url, config.timeout_seconds);
  throw std::invalid_argument("backend mode must be 'stub' or 'real', got '" + config.mode + "'");
}

std::vector<Bytes> GenerationGateway::generate(const GenerationRequest& request) const {
  validate_request(request, max_batch_);
  std::vector<Bytes> images = backend_->generate(request);
  if (images.size() != static_cast<std::size_t>(request.n)) {
    throw GenerationError(GenerationErrorKind::bad_response,
                          "backend returned " + std::to_string(images.size()) + " images, expected " +
                              std::to_string(request.n));
  }
  return images;
}

}  // namespace ivg
