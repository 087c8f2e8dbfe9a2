#include "ivg/store.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <iostream>
#include <mutex>
#include <random>
#include <sstream>

#include <json.hpp>

namespace ivg {

namespace fs = std::filesystem;
using nlohmann::json;

struct ProvenanceStore::SessionState {
  fs::path dir;
  std::mutex write_mutex;
  mutable std::mutex read_mutex;
  std::shared_ptr<const SessionSnapshot> current;

  std::shared_ptr<const SessionSnapshot> get() const {
    std::lock_guard lock(read_mutex);
    return current;
  }
  void publish(std::shared_ptr<const SessionSnapshot> next) {
    std::lock_guard lock(read_mutex);
    current = std::move(next);
  }
};

namespace {

void write_all(int fd, const void* data, std::size_t size, const fs::path& path) {
  const auto* p = static_cast<const char*>(data);
  while (size > 0) {
    const ssize_t n = ::write(fd, p, size);
    if (n < 0) {
      if (errno == EINTR) continue;
      throw StoreError("write failed: " + path.string());
    }
    p += n;
    size -= static_cast<std::size_t>(n);
  }
}

void write_file_atomic(const fs::path& path, const void* data, std::size_t size) {
  static std::atomic<std::uint64_t> counter{0};
  const fs::path tmp = path.string() + ".tmp-" + std::to_string(::getpid()) + "-" +
                       std::to_string(counter.fetch_add(1));
  const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
  if (fd < 0) throw StoreError("cannot create " + tmp.string());
  try {
    write_all(fd, data, size, tmp);
    if (::fsync(fd) != 0) throw StoreError("fsync failed: " + tmp.string());
  } catch (...) {
    ::close(fd);
    ::unlink(tmp.c_str());
    throw;
  }
  ::close(fd);
  if (::rename(tmp.c_str(), path.c_str()) != 0) {
    ::unlink(tmp.c_str());
    throw StoreError("rename failed: " + path.string());
  }
}

void append_line(const fs::path& path, const std::string& line) {
  const int fd = ::open(path.c_str(), O_WRONLY | O_CREAT | O_APPEND, 0644);
  if (fd < 0) throw StoreError("cannot open " + path.string());
  const std::string payload = line + "\n";
  try {
    write_all(fd, payload.data(), payload.size(), path);
    if (::fsync(fd) != 0) throw StoreError("fsync failed: " + path.string());
  } catch (...) {
    ::close(fd);
    throw;
  }
  ::close(fd);
}

// Complete lines of an append-only log. A trailing partial line is a torn
// write; it is cut off so later appends start on a clean line.
std::vector<std::string> read_log(const fs::path& path) {
  std::vector<std::string> lines;
  if (!fs::exists(path)) return lines;
  std::ifstream in(path, std::ios::binary);
  std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t start = 0;
  while (true) {
    const std::size_t nl = content.find('\n', start);
    if (nl == std::string::npos) break;
    if (nl > start) lines.push_back(content.substr(start, nl - start));
    start = nl + 1;
  }
  if (start < content.size()) {
    std::cerr << "ivg: discarding torn record at end of " << path << "\n";
    fs::resize_file(path, start);
  }
  return lines;
}

std::string random_id() {
  static std::mutex mutex;
  static std::mt19937_64 rng{std::random_device{}()};
  std::lock_guard lock(mutex);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(rng()));
  return std::string("s") + std::string(buf, 12);
}

json to_json(const GenerationParams& p) {
  return {{"seed", p.seed}, {"batch_size", p.batch_size}, {"width", p.width}, {"height", p.height},
          {"model", p.model}};
}

GenerationParams params_from_json(const json& j) {
  GenerationParams p;
  p.seed = j.value("seed", std::int64_t{0});
  p.batch_size = j.value("batch_size", 1);
  p.width = j.value("width", 512);
  p.height = j.value("height", 512);
  p.model = j.value("model", std::string("stub"));
  return p;
}

json to_json(const StageCommand& c) {
  return {{"command", std::string(to_string(c.kind))}, {"step", c.step}};
}

StageCommand command_from_json(const json& j) {
  const auto name = j.at("command").get<std::string>();
  if (name != "split" && name != "merge") throw StoreError("unknown stage command " + name);
  return {name == "split" ? StageCommandKind::split : StageCommandKind::merge, j.at("step").get<int>()};
}

}  // namespace

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const auto secs = std::chrono::system_clock::to_time_t(now);
  const auto ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  ::gmtime_r(&secs, &tm);
  char buf[96];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

const ImageAsset& SessionSnapshot::asset(const std::string& id) const {
  auto it = assets.find(id);
  if (it == assets.end()) throw NotFoundError("unknown asset " + id);
  return it->second;
}

Bytes SessionSnapshot::read_asset(const std::string& id) const {
  const ImageAsset& a = asset(id);
  std::ifstream in(a.path, std::ios::binary);
  if (!in) throw StoreError("cannot read asset " + a.path.string());
  Bytes bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return bytes;
}

ProvenanceStore::ProvenanceStore(fs::path root) : root_(std::move(root)) {
  fs::create_directories(root_ / "sessions");
  for (const auto& entry : fs::directory_iterator(root_ / "sessions")) {
    if (entry.is_directory() && fs::exists(entry.path() / "session.json")) load_session(entry.path());
  }
}

ProvenanceStore::~ProvenanceStore() = default;

void ProvenanceStore::load_session(const fs::path& dir) {
  auto snap = std::make_shared<SessionSnapshot>();
  std::ifstream meta_in(dir / "session.json");
  const json meta = json::parse(meta_in, nullptr, false);
  if (meta.is_discarded()) {
    std::cerr << "ivg: skipping session with unreadable metadata: " << dir << "\n";
    return;
  }
  snap->session.id = meta.value("id", dir.filename().string());
  snap->session.title = meta.value("title", std::string());
  snap->session.created_at = meta.value("created_at", std::string());

  for (const auto& line : read_log(dir / "steps.log")) {
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) {
      std::cerr << "ivg: skipping unparsable step record in " << dir << "\n";
      continue;
    }
    StepRecord step;
    step.session_id = snap->session.id;
    step.id = j.value("id", std::string());
    step.order = j.value("order", 0);
    step.prompt = j.value("prompt", std::string());
    step.params = params_from_json(j.value("params", json::object()));
    step.created_at = j.value("created_at", std::string());
    std::map<std::string, ImageAsset> step_assets;
    bool complete = true;
    for (const auto& img : j.value("images", json::array())) {
      ImageAsset a;
      a.id = a.hash = img.at("id").get<std::string>();
      a.byte_length = img.value("bytes", std::size_t{0});
      a.path = dir / "assets" / (a.id + ".png");
      std::error_code ec;
      if (!fs::exists(a.path, ec) || fs::file_size(a.path, ec) != a.byte_length) {
        complete = false;
        break;
      }
      step.image_ids.push_back(a.id);
      step_assets.emplace(a.id, a);
    }
    if (!complete || (!snap->steps.empty() && step.order <= snap->steps.back().order)) {
      std::cerr << "ivg: skipping inconsistent step record in " << dir << "\n";
      continue;
    }
    snap->assets.merge(step_assets);
    snap->steps.push_back(std::move(step));
  }
  for (const auto& line : read_log(dir / "overrides.log")) {
    const json j = json::parse(line, nullptr, false);
    if (j.is_discarded()) continue;
    try {
      snap->overrides.push_back(command_from_json(j));
    } catch (const std::exception&) {
      continue;
    }
  }
  snap->session.step_count = snap->steps.size();
  snap->version = snap->steps.size() + snap->overrides.size();

  auto st = std::make_unique<SessionState>();
  st->dir = dir;
  st->current = std::move(snap);
  std::unique_lock lock(sessions_mutex_);
  sessions_.emplace(st->current->session.id, std::move(st));
}

Session ProvenanceStore::create_session(std::string title) {
  if (title.empty()) title = "Untitled session";
  std::unique_lock lock(sessions_mutex_);
  std::string id;
  do {
    id = random_id();
  } while (sessions_.count(id) || fs::exists(root_ / "sessions" / id));

  const fs::path dir = root_ / "sessions" / id;
  fs::create_directories(dir / "assets");
  auto snap = std::make_shared<SessionSnapshot>();
  snap->session = {id, std::move(title), utc_timestamp(), 0};
  const std::string meta =
      json{{"id", id}, {"title", snap->session.title}, {"created_at", snap->session.created_at}}.dump(2);
  write_file_atomic(dir / "session.json", meta.data(), meta.size());

  auto st = std::make_unique<SessionState>();
  st->dir = dir;
  st->current = snap;
  sessions_.emplace(id, std::move(st));
  return snap->session;
}

std::vector<Session> ProvenanceStore::list_sessions() const {
  std::shared_lock lock(sessions_mutex_);
  std::vector<Session> out;
  for (const auto& [id, st] : sessions_) out.push_back(st->get()->session);
  return out;
}

std::optional<Session> ProvenanceStore::find_session(const std::string& id) const {
  std::shared_lock lock(sessions_mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) return std::nullopt;
  return it->second->get()->session;
}

ProvenanceStore::SessionState& ProvenanceStore::state(const std::string& id) const {
  std::shared_lock lock(sessions_mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError("unknown session " + id);
  return *it->second;
}

StepRecord ProvenanceStore::append_step(const std::string& session_id, const std::string& prompt,
                                        const GenerationParams& params, const std::vector<Bytes>& images,
                                        std::optional<std::string> created_at) {
  SessionState& st = state(session_id);
  std::lock_guard write_lock(st.write_mutex);
  const auto prev = st.get();

  StepRecord step;
  step.session_id = session_id;
  step.order = prev->steps.empty() ? 1 : prev->steps.back().order + 1;
  step.id = "step-" + std::to_string(step.order);
  step.prompt = prompt;
  step.params = params;
  step.created_at = created_at.value_or(utc_timestamp());

  const fs::path asset_dir = st.dir / "assets";
  fs::create_directories(asset_dir);
  std::map<std::string, ImageAsset> new_assets;
  json image_refs = json::array();
  for (const auto& bytes : images) {
    ImageAsset a;
    a.id = a.hash = sha256_hex(std::span<const std::uint8_t>(bytes));
    a.byte_length = bytes.size();
    a.path = asset_dir / (a.id + ".png");
    std::error_code ec;
    if (!fs::exists(a.path, ec) || fs::file_size(a.path, ec) != a.byte_length) {
      write_file_atomic(a.path, bytes.data(), bytes.size());
    }
    step.image_ids.push_back(a.id);
    image_refs.push_back({{"id", a.id}, {"bytes", a.byte_length}});
    new_assets.emplace(a.id, std::move(a));
  }

  const json line = {{"id", step.id},         {"order", step.order},
                     {"prompt", step.prompt}, {"params", to_json(step.params)},
                     {"images", image_refs},  {"created_at", step.created_at}};
  append_line(st.dir / "steps.log", line.dump());

  auto next = std::make_shared<SessionSnapshot>(*prev);
  next->steps.push_back(step);
  next->assets.merge(new_assets);
  next->session.step_count = next->steps.size();
  next->version = prev->version + 1;
  st.publish(std::move(next));
  return step;
}

void ProvenanceStore::append_stage_override(const std::string& session_id, const StageCommand& command) {
  SessionState& st = state(session_id);
  std::lock_guard write_lock(st.write_mutex);
  const auto prev = st.get();
  append_line(st.dir / "overrides.log", to_json(command).dump());
  auto next = std::make_shared<SessionSnapshot>(*prev);
  next->overrides.push_back(command);
  next->version = prev->version + 1;
  st.publish(std::move(next));
}

std::shared_ptr<const SessionSnapshot> ProvenanceStore::snapshot(const std::string& session_id) const {
  return state(session_id).get();
}

void ProvenanceStore::remove_session(const std::string& session_id) {
  std::unique_lock lock(sessions_mutex_);
  auto it = sessions_.find(session_id);
  if (it == sessions_.end()) throw NotFoundError("unknown session " + session_id);
  const fs::path dir = it->second->dir;
  sessions_.erase(it);
  fs::remove_all(dir);
}

}  // namespace ivg
