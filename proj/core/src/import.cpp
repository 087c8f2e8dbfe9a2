#include "ivg/import.hpp"

#include <fstream>
#include <optional>

#include <json.hpp>

#include "ivg/png.hpp"

namespace ivg {

using nlohmann::json;

namespace {

struct PendingStep {
  std::size_t line = 0;
  std::string prompt;
  std::int64_t seed = 0;
  int n = 1;
  std::vector<std::filesystem::path> images;
  std::optional<std::string> timestamp;
};

Bytes read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ImportError("cannot read " + path.string());
  return Bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

}  // namespace

ImportResult import_records(ProvenanceStore& store, const std::filesystem::path& records_file,
                            const GenerationGateway* gateway, std::string title) {
  std::ifstream in(records_file);
  if (!in) throw ImportError("cannot read records file " + records_file.string());
  const auto base = records_file.parent_path();

  std::vector<PendingStep> pending;
  std::string line;
  for (std::size_t number = 1; std::getline(in, line); ++number) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fail = [&](const std::string& why) {
      return ImportError(records_file.string() + ":" + std::to_string(number) + ": " + why);
    };
    const json record = json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.is_object()) throw fail("not a JSON object");
    if (!record.contains("prompt") || !record["prompt"].is_string()) throw fail("missing string 'prompt'");
    PendingStep step;
    step.line = number;
    step.prompt = record["prompt"].get<std::string>();
    if (record.contains("seed")) {
      if (!record["seed"].is_number_integer()) throw fail("'seed' must be an integer");
      step.seed = record["seed"].get<std::int64_t>();
    }
    if (record.contains("timestamp")) {
      if (!record["timestamp"].is_string()) throw fail("'timestamp' must be a string");
      step.timestamp = record["timestamp"].get<std::string>();
    }
    if (record.contains("n")) {
      if (!record["n"].is_number_integer() || record["n"].get<int>() < 1) throw fail("'n' must be a positive integer");
      step.n = record["n"].get<int>();
    }
    if (record.contains("images")) {
      if (!record["images"].is_array()) throw fail("'images' must be an array of paths");
      for (const auto& ref : record["images"]) {
        if (!ref.is_string()) throw fail("'images' must be an array of paths");
        std::filesystem::path path = ref.get<std::string>();
        if (path.is_relative()) path = base / path;
        if (!std::filesystem::is_regular_file(path)) throw fail("image not found: " + path.string());
        const Bytes bytes = read_file(path);
        if (!read_png_info(bytes)) throw fail("not a PNG image: " + path.string());
        step.images.push_back(path);
      }
    }
    if (step.images.empty()) {
      if (!gateway) throw fail("record has no images and no generation backend is configured");
      try {
        validate_request({step.prompt, step.n, step.seed, 512, 512});
      } catch (const GenerationError& e) {
        throw fail(e.what());
      }
    }
    pending.push_back(std::move(step));
  }
  if (pending.empty()) throw ImportError(records_file.string() + ": no records");

  if (title.empty()) title = records_file.stem().string();
  ImportResult result;
  result.session = store.create_session(title);
  try {
    for (const auto& step : pending) {
      std::vector<Bytes> images;
      GenerationParams params;
      params.seed = step.seed;
      if (step.images.empty()) {
        try {
          images = gateway->generate({step.prompt, step.n, step.seed, params.width, params.height});
        } catch (const GenerationError& e) {
          throw ImportError(records_file.string() + ":" + std::to_string(step.line) + ": " + e.what());
        }
        params.model = gateway->model_tag();
      } else {
        for (const auto& path : step.images) images.push_back(read_file(path));
        params.model = "imported";
        if (auto info = read_png_info(images.front())) {
          params.width = info->width;
          params.height = info->height;
        }
      }
      params.batch_size = static_cast<int>(images.size());
      store.append_step(result.session.id, step.prompt, params, images, step.timestamp);
      ++result.steps;
      result.images += images.size();
    }
  } catch (...) {
    store.remove_session(result.session.id);
    throw;
  }
  result.session = *store.find_session(result.session.id);
  return result;
}

}  // namespace ivg
