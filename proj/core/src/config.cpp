#include "ivg/config.hpp"

#include <cstdlib>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "ivg/embedding_http.hpp"

namespace ivg {

using nlohmann::json;

namespace {

template <typename T>
void read_key(const json& obj, const char* key, T& out) {
  if (obj.contains(key) && !obj[key].is_null()) out = obj[key].get<T>();
}

int to_int(const std::string& name, const std::string& value) {
  std::size_t used = 0;
  const int parsed = std::stoi(value, &used);
  if (used != value.size()) throw std::invalid_argument(name + " is not an integer: " + value);
  return parsed;
}

double to_double(const std::string& name, const std::string& value) {
  std::size_t used = 0;
  const double parsed = std::stod(value, &used);
  if (used != value.size()) throw std::invalid_argument(name + " is not a number: " + value);
  return parsed;
}

}  // namespace

ServiceConfig load_config_file(const std::filesystem::path& path, ServiceConfig config) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
    if (!doc.is_object()) throw std::runtime_error("config root must be an object");
    std::string data_dir = config.data_dir.string();
    read_key(doc, "data_dir", data_dir);
    config.data_dir = data_dir;
    read_key(doc, "host", config.host);
    read_key(doc, "port", config.port);
    read_key(doc, "seed", config.seed);
    read_key(doc, "allow_degraded_embeddings", config.allow_degraded_embeddings);
    if (doc.contains("ui_dir") && doc["ui_dir"].is_string()) config.ui_dir = doc["ui_dir"].get<std::string>();
    if (doc.contains("backend")) {
      const auto& b = doc["backend"];
      read_key(b, "mode", config.backend.mode);
      read_key(b, "url", config.backend.url);
      read_key(b, "timeout_seconds", config.backend.timeout_seconds);
      read_key(b, "max_batch", config.backend.max_batch);
    }
    if (doc.contains("embed")) {
      const auto& e = doc["embed"];
      read_key(e, "mode", config.embed.mode);
      read_key(e, "url", config.embed.url);
      read_key(e, "timeout_seconds", config.embed.timeout_seconds);
      read_key(e, "dimension", config.embed.dimension);
    }
  } catch (const json::exception& e) {
    throw std::runtime_error("malformed config file " + path.string() + ": " + e.what());
  }
  return config;
}

ServiceConfig apply_env_overrides(ServiceConfig config, const EnvLookup& lookup) {
  if (auto v = lookup("IVG_DATA_DIR")) config.data_dir = *v;
  if (auto v = lookup("IVG_PORT")) config.port = to_int("IVG_PORT", *v);
  if (auto v = lookup("IVG_SEED")) config.seed = to_int("IVG_SEED", *v);
  if (auto v = lookup("IVG_BACKEND_MODE")) config.backend.mode = *v;
  if (auto v = lookup("IVG_BACKEND_URL")) config.backend.url = *v;
  if (auto v = lookup("IVG_BACKEND_TIMEOUT")) config.backend.timeout_seconds = to_double("IVG_BACKEND_TIMEOUT", *v);
  if (auto v = lookup("IVG_EMBED_MODE")) config.embed.mode = *v;
  if (auto v = lookup("IVG_EMBED_URL")) config.embed.url = *v;
  if (auto v = lookup("IVG_EMBED_TIMEOUT")) config.embed.timeout_seconds = to_double("IVG_EMBED_TIMEOUT", *v);
  return config;
}

std::optional<std::string> process_env(const std::string& name) {
  if (const char* value = std::getenv(name.c_str())) return std::string(value);
  return std::nullopt;
}

void validate_config(const ServiceConfig& config) {
  if (config.port < 0 || config.port > 65535) throw std::invalid_argument("port must be in [0, 65535]");
  if (config.backend.mode != "stub" && config.backend.mode != "real") {
    throw std::invalid_argument("backend mode must be 'stub' or 'real'");
  }
  if (config.embed.mode != "stub" && config.embed.mode != "real") {
    throw std::invalid_argument("embed mode must be 'stub' or 'real'");
  }
  if (!(config.backend.timeout_seconds > 0) || !(config.embed.timeout_seconds > 0)) {
    throw std::invalid_argument("timeouts must be positive");
  }
  if (config.backend.max_batch < 1) throw std::invalid_argument("max_batch must be at least 1");
  if (config.embed.dimension < 2) throw std::invalid_argument("embedding dimension must be at least 2");
}

std::unique_ptr<EmbeddingProvider> make_embedding_provider(const EmbedConfig& config) {
  if (config.mode == "stub") return std::make_unique<StubEmbeddingProvider>(config.dimension);
  if (config.mode == "real") {
    return std::make_unique<HttpEmbeddingProvider>(config.url, config.timeout_seconds, config.dimension);
  }
  throw std::invalid_argument("embed mode must be 'stub' or 'real', got '" + config.mode + "'");
}

}  // namespace ivg
