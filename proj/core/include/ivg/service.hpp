#pragma once

// HTTP+JSON service under /api/v1: sessions, generation jobs, graph builds,
// history, stage edits and image assets.

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <list>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "ivg/config.hpp"
#include "ivg/embedding.hpp"
#include "ivg/gateway.hpp"
#include "ivg/pipeline.hpp"
#include "ivg/store.hpp"

namespace httplib {
class Server;
}

namespace ivg {

enum class JobStatus { queued, running, completed, failed };
std::string_view to_string(JobStatus status);

struct GenerationJob {
  std::string id;
  std::string session_id;
  GenerationRequest request;
  JobStatus status = JobStatus::queued;
  std::optional<StepRecord> step;
  std::string error;
  std::string error_kind;
  std::optional<int> retry_after_seconds;
  std::string created_at;
};

nlohmann::json job_to_json(const GenerationJob& job);

class Service {
 public:
  Service(ServiceConfig config, std::shared_ptr<GenerationBackend> backend,
          std::shared_ptr<EmbeddingProvider> embedder);
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  // Binds to config.host:port (0 picks a free port) and returns the port.
  int bind();
  // Serves until stop(); call after bind().
  void listen();
  void stop();

  ProvenanceStore& store() { return store_; }
  const ServiceConfig& config() const { return config_; }

  // Graph build through the cache; the document is serialized JSON.
  std::shared_ptr<const std::string> graph_document(const std::string& session_id, const BuildParams& params);

  // Queues a generation job; throws GenerationError(invalid_request) or
  // NotFoundError before queueing.
  GenerationJob submit(const std::string& session_id, const GenerationRequest& request);
  std::optional<GenerationJob> job(const std::string& job_id) const;
  // Blocks until every queued job has finished.
  void drain();

  BuildParams default_params() const;

 private:
  struct SessionQueue {
    std::deque<std::string> pending;
    std::thread worker;
  };

  void routes();
  void run_queue(const std::string& session_id);
  void run_job(const std::string& job_id);

  ServiceConfig config_;
  ProvenanceStore store_;
  GenerationGateway gateway_;
  std::shared_ptr<EmbeddingProvider> embedder_;
  EmbeddingCache embed_cache_;
  std::unique_ptr<httplib::Server> server_;

  mutable std::mutex jobs_mutex_;
  std::condition_variable jobs_cv_;
  std::map<std::string, GenerationJob> jobs_;
  std::map<std::string, SessionQueue> queues_;
  std::uint64_t next_job_ = 1;
  std::size_t active_jobs_ = 0;
  bool stopping_ = false;

  std::mutex graph_mutex_;
  std::map<std::string, std::shared_ptr<const std::string>> graph_cache_;
  std::list<std::string> graph_lru_;
  std::map<std::string, std::shared_ptr<const GraphLayout>> previous_;
};

inline constexpr std::size_t kGraphCacheCapacity = 64;

}  // namespace ivg
