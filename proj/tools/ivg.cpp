#include <csignal>
#include <fstream>
#include <iostream>
#include <pthread.h>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "ivg/config.hpp"
#include "ivg/document.hpp"
#include "ivg/import.hpp"
#include "ivg/pipeline.hpp"
#include "ivg/service.hpp"
#include "ivg/svg.hpp"

namespace {

struct GlobalFlags {
  std::string config_file;
  std::string data_dir;
  std::string backend_url;
  std::string backend_mode;
  std::string embed_url;
  std::string embed_mode;
  std::optional<std::int64_t> seed;
  std::optional<int> port;
};

ivg::ServiceConfig resolve_config(const GlobalFlags& flags) {
  ivg::ServiceConfig config;
  if (!flags.config_file.empty()) config = ivg::load_config_file(flags.config_file);
  config = ivg::apply_env_overrides(std::move(config), ivg::process_env);
  if (!flags.data_dir.empty()) config.data_dir = flags.data_dir;
  if (!flags.backend_url.empty()) config.backend.url = flags.backend_url;
  if (!flags.backend_mode.empty()) config.backend.mode = flags.backend_mode;
  if (!flags.embed_url.empty()) config.embed.url = flags.embed_url;
  if (!flags.embed_mode.empty()) config.embed.mode = flags.embed_mode;
  if (flags.seed) config.seed = *flags.seed;
  if (flags.port) config.port = *flags.port;
  ivg::validate_config(config);
  return config;
}

void write_output(const std::string& path, const std::string& content) {
  if (path.empty() || path == "-") {
    std::cout << content;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
  if (!out.flush()) throw std::runtime_error("cannot write " + path);
}

int run_serve(const ivg::ServiceConfig& config) {
  // Block termination signals here so a dedicated thread can wait for them.
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  ivg::Service service(config, ivg::make_backend(config.backend), ivg::make_embedding_provider(config.embed));
  const int port = service.bind();
  std::cout << "ivg listening on http://" << config.host << ":" << port << "/api/v1" << std::endl;
  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    service.stop();
  });
  service.listen();
  // listen() returns after stop(); wake the waiter if it is still blocked.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Image Variant Graph engine"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags flags;
  app.add_option("--config", flags.config_file, "JSON configuration file");
  app.add_option("--data-dir", flags.data_dir, "Session store directory");
  app.add_option("--backend-url", flags.backend_url, "txt2img backend base URL");
  app.add_option("--backend-mode", flags.backend_mode, "Generation backend: stub or real");
  app.add_option("--embed-url", flags.embed_url, "Embedding provider URL");
  app.add_option("--embed-mode", flags.embed_mode, "Embedding provider: stub or real");
  app.add_option("--seed", flags.seed, "Default seed for generation and projection");

  auto* serve = app.add_subcommand("serve", "Start the HTTP service");
  serve->add_option("--port", flags.port, "Listen port (0 picks a free one)");
  std::string host, ui_dir;
  serve->add_option("--host", host, "Listen address");
  serve->add_option("--ui-dir", ui_dir, "Static UI directory served at /");

  auto* import = app.add_subcommand("import", "Load a session from a line-delimited records file");
  std::string records_file, title;
  import->add_option("records", records_file, "Records file (.jsonl)")->required();
  import->add_option("--title", title, "Session title (default: file name)");

  auto* build = app.add_subcommand("build", "Write the layout document of a session");
  std::string session_id, build_out = "-";
  std::string alpha, s_min, w_min, n_e, cluster_distance, grouping, passes;
  bool allow_degraded = false;
  build->add_option("session", session_id, "Session id")->required();
  build->add_option("-o,--out", build_out, "Output file (default: stdout)");
  build->add_option("--alpha", alpha, "Text/image combination weight in [0, 1]");
  build->add_option("--s-min", s_min, "Prompt similarity threshold in [0, 1]");
  build->add_option("--w-min", w_min, "Bundle weight threshold (default: auto)");
  build->add_option("--n-e", n_e, "Visible bundle cap in auto mode");
  build->add_option("--cluster-distance", cluster_distance, "Clustering cut distance");
  build->add_option("--grouping", grouping, "Bubble grouping: cluster or stage");
  build->add_option("--passes", passes, "Redistribution passes");
  build->add_flag("--allow-degraded", allow_degraded, "Substitute stub vectors when embedding fails");

  auto* svg = app.add_subcommand("export-svg", "Render a layout document as SVG");
  std::string layout_file, svg_out = "-", asset_prefix;
  svg->add_option("layout", layout_file, "Layout document (.json)")->required();
  svg->add_option("-o,--out", svg_out, "Output file (default: stdout)");
  svg->add_option("--asset-prefix", asset_prefix, "Prefix for thumbnail paths");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*svg) {
      std::ifstream in(layout_file);
      if (!in) throw std::runtime_error("cannot read " + layout_file);
      const auto doc = nlohmann::json::parse(in);
      ivg::SvgOptions options;
      options.asset_prefix = asset_prefix;
      write_output(svg_out, ivg::render_svg(doc, options));
      return 0;
    }

    ivg::ServiceConfig config = resolve_config(flags);
    if (*serve) {
      if (!host.empty()) config.host = host;
      if (!ui_dir.empty()) config.ui_dir = ui_dir;
      return run_serve(config);
    }

    ivg::ProvenanceStore store(config.data_dir);
    if (*import) {
      ivg::GenerationGateway gateway(ivg::make_backend(config.backend), config.backend.max_batch);
      const auto result = ivg::import_records(store, records_file, &gateway, title);
      std::cout << result.session.id << "\t" << result.steps << " steps\t" << result.images << " images\n";
      return 0;
    }

    if (*build) {
      std::multimap<std::string, std::string> query;
      auto put = [&](const char* key, const std::string& value) {
        if (!value.empty()) query.emplace(key, value);
      };
      put("alpha", alpha);
      put("s_min", s_min);
      put("w_min", w_min);
      put("n_e", n_e);
      put("cluster_distance", cluster_distance);
      put("grouping", grouping);
      put("passes", passes);
      ivg::BuildParams base;
      base.seed = static_cast<std::uint64_t>(config.seed);
      base.allow_degraded = allow_degraded || config.allow_degraded_embeddings;
      const ivg::BuildParams params = ivg::parse_build_params(query, base);
      const auto snapshot = store.snapshot(session_id);
      auto provider = ivg::make_embedding_provider(config.embed);
      ivg::EmbeddingCache cache;
      const auto layout = ivg::build_layout(*snapshot, *provider, &cache, params);
      write_output(build_out, ivg::layout_document(*layout).dump(2) + "\n");
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "ivg: " << e.what() << std::endl;
    return 1;
  }
  return 0;
}
