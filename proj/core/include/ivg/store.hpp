#pragma once

// Append-only provenance store for prompting sessions.
//
// On-disk layout under the store root:
//   sessions/<id>/session.json     session metadata
//   sessions/<id>/steps.log        one JSON step record per line, append-only
//   sessions/<id>/assets/<hash>.png  content-addressed image bytes
//   sessions/<id>/overrides.log    one JSON stage command per line
//
// Assets are written (tmp + rename) before the step line that references
// them, and each line is written and synced in one call. A torn final line
// left by a crash is discarded when the session is reopened.

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "ivg/hashing.hpp"
#include "ivg/layout.hpp"

namespace ivg {

class StoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NotFoundError : public StoreError {
 public:
  using StoreError::StoreError;
};

struct GenerationParams {
  std::int64_t seed = 0;
  int batch_size = 1;
  int width = 512;
  int height = 512;
  std::string model = "stub";
};

struct Session {
  std::string id;
  std::string title;
  std::string created_at;
  std::size_t step_count = 0;
};

struct ImageAsset {
  std::string id;  // equals the content hash
  std::string hash;
  std::size_t byte_length = 0;
  std::string format = "png";
  std::filesystem::path path;
};

struct StepRecord {
  std::string id;
  std::string session_id;
  int order = 0;
  std::string prompt;
  GenerationParams params;
  std::vector<std::string> image_ids;
  std::string created_at;
};

// Immutable view of one session at a point in time.
struct SessionSnapshot {
  Session session;
  std::vector<StepRecord> steps;
  std::map<std::string, ImageAsset> assets;
  std::vector<StageCommand> overrides;
  // Bumped by every append or override; identifies the snapshot content.
  std::uint64_t version = 0;

  const ImageAsset& asset(const std::string& id) const;
  Bytes read_asset(const std::string& id) const;
};

std::string utc_timestamp();

class ProvenanceStore {
 public:
  // Opens (creating if needed) the store rooted at `root` and loads every
  // session found there.
  explicit ProvenanceStore(std::filesystem::path root);
  ~ProvenanceStore();

  ProvenanceStore(const ProvenanceStore&) = delete;
  ProvenanceStore& operator=(const ProvenanceStore&) = delete;

  const std::filesystem::path& root() const { return root_; }

  Session create_session(std::string title);
  std::vector<Session> list_sessions() const;
  std::optional<Session> find_session(const std::string& id) const;

  // All-or-nothing: assets first, then the step line. Throws NotFoundError
  // for unknown sessions and StoreError on I/O failure.
  StepRecord append_step(const std::string& session_id, const std::string& prompt,
                         const GenerationParams& params, const std::vector<Bytes>& images,
                         std::optional<std::string> created_at = std::nullopt);

  void append_stage_override(const std::string& session_id, const StageCommand& command);

  std::shared_ptr<const SessionSnapshot> snapshot(const std::string& session_id) const;

  // Removes a session directory entirely (used to roll back failed imports).
  void remove_session(const std::string& session_id);

 private:
  struct SessionState;

  SessionState& state(const std::string& id) const;
  void load_session(const std::filesystem::path& dir);

  std::filesystem::path root_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::unique_ptr<SessionState>> sessions_;
};

}  // namespace ivg
