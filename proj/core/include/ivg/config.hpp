#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "ivg/embedding.hpp"
#include "ivg/gateway.hpp"

namespace ivg {

struct EmbedConfig {
  std::string mode = "stub";  // "stub" | "real"
  std::string url = "http://127.0.0.1:7861/embed";
  double timeout_seconds = 60.0;
  std::size_t dimension = kEmbeddingDim;
};

struct ServiceConfig {
  std::filesystem::path data_dir = "ivg-data";
  std::string host = "127.0.0.1";
  int port = 8080;
  GatewayConfig backend;
  EmbedConfig embed;
  std::int64_t seed = 42;
  bool allow_degraded_embeddings = false;
  std::optional<std::filesystem::path> ui_dir;
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

// Reads a JSON config file; keys missing from the file keep their defaults.
// Throws std::runtime_error on unreadable or malformed files.
ServiceConfig load_config_file(const std::filesystem::path& path, ServiceConfig base = {});

// Applies IVG_DATA_DIR, IVG_PORT, IVG_SEED, IVG_BACKEND_MODE, IVG_BACKEND_URL,
// IVG_BACKEND_TIMEOUT, IVG_EMBED_MODE, IVG_EMBED_URL and IVG_EMBED_TIMEOUT.
ServiceConfig apply_env_overrides(ServiceConfig config, const EnvLookup& lookup);
std::optional<std::string> process_env(const std::string& name);

// Throws std::invalid_argument on unknown modes or out-of-range values.
void validate_config(const ServiceConfig& config);

std::unique_ptr<EmbeddingProvider> make_embedding_provider(const EmbedConfig& config);

}  // namespace ivg
