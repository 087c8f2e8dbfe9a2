#include <doctest.h>

#include <fstream>
#include <map>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "ivg/config.hpp"
#include "ivg/embedding_http.hpp"
#include "ivg/hashing.hpp"
#include "tempdir.hpp"

using namespace ivg;
using nlohmann::json;

namespace {

EnvLookup env(std::map<std::string, std::string> values) {
  return [values](const std::string& name) -> std::optional<std::string> {
    auto it = values.find(name);
    if (it == values.end()) return std::nullopt;
    return it->second;
  };
}

}  // namespace

TEST_CASE("defaults") {
  ServiceConfig c;
  CHECK(c.port == 8080);
  CHECK(c.backend.mode == "stub");
  CHECK(c.embed.mode == "stub");
  CHECK(c.embed.dimension == 512);
  CHECK(c.backend.max_batch == 8);
  CHECK_NOTHROW(validate_config(c));
}

TEST_CASE("config file") {
  testing::TempDir dir;
  const auto path = dir.path() / "ivg.json";
  std::ofstream(path) << R"({"data_dir": "/srv/ivg", "port": 9000, "seed": 3,
    "backend": {"mode": "real", "url": "http://gpu:7860", "timeout_seconds": 30},
    "embed": {"url": "http://gpu:7861/embed"}})";
  auto c = load_config_file(path);
  CHECK(c.data_dir == "/srv/ivg");
  CHECK(c.port == 9000);
  CHECK(c.seed == 3);
  CHECK(c.backend.mode == "real");
  CHECK(c.backend.url == "http://gpu:7860");
  CHECK(c.backend.timeout_seconds == 30.0);
  CHECK(c.embed.mode == "stub");
  CHECK(c.embed.url == "http://gpu:7861/embed");

  std::ofstream(dir.path() / "bad.json") << "{port: }";
  CHECK_THROWS_AS(load_config_file(dir.path() / "bad.json"), std::runtime_error);
  CHECK_THROWS_AS(load_config_file(dir.path() / "missing.json"), std::runtime_error);
}

TEST_CASE("environment overrides") {
  auto c = apply_env_overrides({}, env({{"IVG_PORT", "7001"},
                                        {"IVG_BACKEND_MODE", "real"},
                                        {"IVG_EMBED_TIMEOUT", "2.5"},
                                        {"IVG_DATA_DIR", "/tmp/x"}}));
  CHECK(c.port == 7001);
  CHECK(c.backend.mode == "real");
  CHECK(c.embed.timeout_seconds == 2.5);
  CHECK(c.data_dir == "/tmp/x");
  CHECK_THROWS(apply_env_overrides({}, env({{"IVG_PORT", "80a"}})));
}

TEST_CASE("validation") {
  ServiceConfig c;
  c.backend.mode = "gpu";
  CHECK_THROWS_AS(validate_config(c), std::invalid_argument);
  c = {};
  c.embed.mode = "clip";
  CHECK_THROWS_AS(validate_config(c), std::invalid_argument);
  c = {};
  c.port = 70000;
  CHECK_THROWS_AS(validate_config(c), std::invalid_argument);
  c = {};
  c.backend.timeout_seconds = 0;
  CHECK_THROWS_AS(validate_config(c), std::invalid_argument);
}

TEST_CASE("http embedding provider") {
  httplib::Server server;
  int calls = 0;
  bool broken = false;
  server.Post("/embed", [&](const httplib::Request& req, httplib::Response& res) {
    ++calls;
    if (broken) {
      res.status = 500;
      return;
    }
    const auto body = json::parse(req.body);
    StubEmbeddingProvider stub(4);
    json out{{"text_vecs", json::array()}, {"image_vecs", json::array()}};
    for (const auto& t : body.at("texts")) out["text_vecs"].push_back(stub.text_vector(t.get<std::string>()));
    for (const auto& i : body.at("images")) {
      out["image_vecs"].push_back(stub.image_vector(base64_decode(i.get<std::string>())));
    }
    res.set_content(out.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  EmbedConfig cfg;
  cfg.mode = "real";
  cfg.url = "http://127.0.0.1:" + std::to_string(port) + "/embed";
  cfg.dimension = 4;
  auto provider = make_embedding_provider(cfg);
  auto img = std::make_shared<const Bytes>(Bytes{1, 2, 3});
  auto batch = provider->embed({"a cat"}, {img});
  StubEmbeddingProvider stub(4);
  REQUIRE(batch.text_vecs.size() == 1);
  CHECK(batch.text_vecs[0] == stub.text_vector("a cat"));
  CHECK(batch.image_vecs[0] == stub.image_vector(*img));

  broken = true;
  CHECK_THROWS_AS(provider->embed({"a cat"}, {}), EmbeddingError);

  server.stop();
  t.join();
  CHECK(calls == 2);
  cfg.mode = "other";
  CHECK_THROWS_AS(make_embedding_provider(cfg), std::invalid_argument);
}
