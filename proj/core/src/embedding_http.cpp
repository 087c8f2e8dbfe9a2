#include "ivg/embedding_http.hpp"

#include <httplib.h>
#include <json.hpp>

#include "ivg/http_url.hpp"

namespace ivg {

using nlohmann::json;

namespace {

std::vector<Vector> read_vectors(const json& reply, const char* field, std::size_t expected) {
  if (expected == 0 && !reply.contains(field)) return {};
  if (!reply.contains(field) || !reply[field].is_array()) {
    throw EmbeddingError(std::string("embedding reply lacks '") + field + "'");
  }
  std::vector<Vector> out;
  for (const auto& row : reply[field]) {
    if (!row.is_array()) throw EmbeddingError(std::string("'") + field + "' entry is not an array");
    Vector v;
    v.reserve(row.size());
    for (const auto& x : row) {
      if (!x.is_number()) throw EmbeddingError(std::string("'") + field + "' has a non-numeric component");
      v.push_back(x.get<double>());
    }
    out.push_back(std::move(v));
  }
  return out;
}

}  // namespace

HttpEmbeddingProvider::HttpEmbeddingProvider(std::string url, double timeout_seconds, std::size_t dimension)
    : url_(std::move(url)), timeout_seconds_(timeout_seconds), dimension_(dimension) {}

EmbeddingBatch HttpEmbeddingProvider::embed(const std::vector<std::string>& texts,
                                            const std::vector<std::shared_ptr<const Bytes>>& images) {
  const HttpUrl url = split_url(url_);
  httplib::Client client(url.origin);
  const auto secs = static_cast<time_t>(timeout_seconds_);
  const auto usecs = static_cast<time_t>((timeout_seconds_ - static_cast<double>(secs)) * 1e6);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  json body = {{"texts", texts}, {"images", json::array()}};
  for (const auto& image : images) body["images"].push_back(base64_encode(*image));

  auto res = client.Post(url.path, body.dump(), "application/json");
  if (!res) throw EmbeddingError("embedding provider unreachable: " + httplib::to_string(res.error()));
  if (res->status != 200) {
    throw EmbeddingError("embedding provider returned HTTP " + std::to_string(res->status));
  }
  const json reply = json::parse(res->body, nullptr, false);
  if (reply.is_discarded() || !reply.is_object()) throw EmbeddingError("embedding reply is not a JSON object");
  EmbeddingBatch batch;
  batch.text_vecs = read_vectors(reply, "text_vecs", texts.size());
  batch.image_vecs = read_vectors(reply, "image_vecs", images.size());
  return batch;
}

}  // namespace ivg
