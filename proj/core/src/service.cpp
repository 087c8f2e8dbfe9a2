#include "ivg/service.hpp"

#include <httplib.h>

#include "ivg/document.hpp"

namespace ivg {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
  send_json(res, status, {{"error", message}});
}

std::multimap<std::string, std::string> query_of(const httplib::Request& req) {
  return {req.params.begin(), req.params.end()};
}

double s_min_param(const httplib::Request& req, double fallback) {
  if (!req.has_param("s_min")) return fallback;
  std::multimap<std::string, std::string> only{{"s_min", req.get_param_value("s_min")}};
  BuildParams base;
  base.graph.s_min = fallback;
  return parse_build_params(only, base).graph.s_min;
}

int status_for(GenerationErrorKind kind) {
  switch (kind) {
    case GenerationErrorKind::invalid_request: return 422;
    case GenerationErrorKind::unavailable: return 503;
    case GenerationErrorKind::bad_response: return 502;
  }
  return 500;
}

std::string_view to_string(GenerationErrorKind kind) {
  switch (kind) {
    case GenerationErrorKind::invalid_request: return "invalid_request";
    case GenerationErrorKind::unavailable: return "unavailable";
    case GenerationErrorKind::bad_response: return "bad_response";
  }
  return "unknown";
}

}  // namespace

std::string_view to_string(JobStatus status) {
  switch (status) {
    case JobStatus::queued: return "queued";
    case JobStatus::running: return "running";
    case JobStatus::completed: return "completed";
    case JobStatus::failed: return "failed";
  }
  return "unknown";
}

json job_to_json(const GenerationJob& job) {
  json out = {{"id", job.id},
              {"session_id", job.session_id},
              {"status", to_string(job.status)},
              {"prompt", job.request.prompt},
              {"n", job.request.n},
              {"seed", job.request.seed},
              {"width", job.request.width},
              {"height", job.request.height},
              {"created_at", job.created_at}};
  if (job.step) out["step"] = step_to_json(*job.step);
  if (job.status == JobStatus::failed) {
    out["error"] = job.error;
    out["error_kind"] = job.error_kind;
    if (job.retry_after_seconds) out["retry_after"] = *job.retry_after_seconds;
  }
  return out;
}

Service::Service(ServiceConfig config, std::shared_ptr<GenerationBackend> backend,
                 std::shared_ptr<EmbeddingProvider> embedder)
    : config_(std::move(config)),
      store_(config_.data_dir),
      gateway_(std::move(backend), config_.backend.max_batch),
      embedder_(std::move(embedder)),
      server_(std::make_unique<httplib::Server>()) {
  routes();
}

Service::~Service() { stop(); }

int Service::bind() {
  if (config_.port == 0) return server_->bind_to_any_port(config_.host);
  if (!server_->bind_to_port(config_.host, config_.port)) {
    throw std::runtime_error("cannot bind " + config_.host + ":" + std::to_string(config_.port));
  }
  return config_.port;
}

void Service::listen() { server_->listen_after_bind(); }

void Service::stop() {
  server_->stop();
  std::vector<std::thread> workers;
  {
    std::lock_guard lock(jobs_mutex_);
    stopping_ = true;
    for (auto& [id, queue] : queues_) {
      if (queue.worker.joinable()) workers.push_back(std::move(queue.worker));
    }
  }
  jobs_cv_.notify_all();
  for (auto& w : workers) w.join();
}

BuildParams Service::default_params() const {
  BuildParams params;
  params.seed = static_cast<std::uint64_t>(config_.seed);
  params.allow_degraded = config_.allow_degraded_embeddings;
  return params;
}

std::shared_ptr<const std::string> Service::graph_document(const std::string& session_id,
                                                           const BuildParams& params) {
  auto snapshot = store_.snapshot(session_id);
  const std::string pkey = session_id + "|" + params_key(params);
  const std::string key = pkey + "|v" + std::to_string(snapshot->version);
  std::shared_ptr<const GraphLayout> previous;
  {
    std::lock_guard lock(graph_mutex_);
    if (auto it = graph_cache_.find(key); it != graph_cache_.end()) {
      graph_lru_.remove(key);
      graph_lru_.push_front(key);
      return it->second;
    }
    if (auto it = previous_.find(pkey); it != previous_.end()) previous = it->second;
  }
  if (previous && previous->version > snapshot->version) previous.reset();
  auto layout = build_layout(*snapshot, *embedder_, &embed_cache_, params, previous.get());
  auto doc = std::make_shared<const std::string>(layout_document(*layout).dump());

  std::lock_guard lock(graph_mutex_);
  if (auto it = graph_cache_.find(key); it != graph_cache_.end()) return it->second;
  graph_cache_[key] = doc;
  graph_lru_.push_front(key);
  while (graph_lru_.size() > kGraphCacheCapacity) {
    graph_cache_.erase(graph_lru_.back());
    graph_lru_.pop_back();
  }
  auto& prev = previous_[pkey];
  if (!prev || prev->version <= layout->version) prev = layout;
  return doc;
}

GenerationJob Service::submit(const std::string& session_id, const GenerationRequest& request) {
  if (!store_.find_session(session_id)) throw NotFoundError("unknown session " + session_id);
  validate_request(request, config_.backend.max_batch);
  std::lock_guard lock(jobs_mutex_);
  if (stopping_) throw GenerationError(GenerationErrorKind::unavailable, "service is stopping");
  GenerationJob job;
  job.id = "job-" + std::to_string(next_job_++);
  job.session_id = session_id;
  job.request = request;
  job.created_at = utc_timestamp();
  jobs_[job.id] = job;
  auto& queue = queues_[session_id];
  queue.pending.push_back(job.id);
  if (!queue.worker.joinable()) queue.worker = std::thread([this, session_id] { run_queue(session_id); });
  jobs_cv_.notify_all();
  return job;
}

std::optional<GenerationJob> Service::job(const std::string& job_id) const {
  std::lock_guard lock(jobs_mutex_);
  auto it = jobs_.find(job_id);
  if (it == jobs_.end()) return std::nullopt;
  return it->second;
}

void Service::drain() {
  std::unique_lock lock(jobs_mutex_);
  jobs_cv_.wait(lock, [&] {
    if (active_jobs_ != 0) return false;
    for (const auto& [id, queue] : queues_) {
      if (!queue.pending.empty()) return false;
    }
    return true;
  });
}

void Service::run_queue(const std::string& session_id) {
  std::unique_lock lock(jobs_mutex_);
  for (;;) {
    auto& queue = queues_[session_id];
    jobs_cv_.wait(lock, [&] { return stopping_ || !queue.pending.empty(); });
    if (stopping_) return;
    const std::string job_id = queue.pending.front();
    queue.pending.pop_front();
    ++active_jobs_;
    jobs_[job_id].status = JobStatus::running;
    lock.unlock();
    run_job(job_id);
    lock.lock();
    --active_jobs_;
    jobs_cv_.notify_all();
  }
}

void Service::run_job(const std::string& job_id) {
  GenerationRequest request;
  std::string session_id;
  {
    std::lock_guard lock(jobs_mutex_);
    request = jobs_[job_id].request;
    session_id = jobs_[job_id].session_id;
  }
  std::optional<StepRecord> step;
  std::string error, kind;
  std::optional<int> retry_after;
  try {
    std::vector<Bytes> images = gateway_.generate(request);
    GenerationParams params;
    params.seed = request.seed;
    params.batch_size = request.n;
    params.width = request.width;
    params.height = request.height;
    params.model = gateway_.model_tag();
    step = store_.append_step(session_id, request.prompt, params, images);
  } catch (const GenerationError& e) {
    error = e.what();
    kind = std::string(to_string(e.kind()));
    retry_after = e.retry_after_seconds();
  } catch (const std::exception& e) {
    error = e.what();
    kind = "internal";
  }
  std::lock_guard lock(jobs_mutex_);
  auto& job = jobs_[job_id];
  if (step) {
    job.status = JobStatus::completed;
    job.step = std::move(step);
  } else {
    job.status = JobStatus::failed;
    job.error = error;
    job.error_kind = kind;
    job.retry_after_seconds = retry_after;
  }
}

void Service::routes() {
  auto& srv = *server_;

  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const NotFoundError& e) {
      send_error(res, 404, e.what());
    } catch (const ParamError& e) {
      send_error(res, 422, e.what());
    } catch (const StageCommandError& e) {
      send_error(res, 422, e.what());
    } catch (const GenerationError& e) {
      send_error(res, status_for(e.kind()), e.what());
      if (e.retry_after_seconds()) res.set_header("Retry-After", std::to_string(*e.retry_after_seconds()));
    } catch (const EmbeddingError& e) {
      send_error(res, 503, e.what());
    } catch (const json::exception& e) {
      send_error(res, 400, std::string("malformed JSON body: ") + e.what());
    } catch (const std::exception& e) {
      send_error(res, 500, e.what());
    }
  });
  srv.set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
  });
  srv.Options(R"(/api/v1/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Methods", "GET, POST, PATCH, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.status = 204;
  });

  srv.Get("/api/v1/health", [](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, {{"status", "ok"}});
  });

  srv.Get("/api/v1/sessions", [this](const httplib::Request&, httplib::Response& res) {
    json out = json::array();
    for (const auto& s : store_.list_sessions()) out.push_back(session_to_json(s));
    send_json(res, 200, {{"sessions", std::move(out)}});
  });

  srv.Post("/api/v1/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    std::string title;
    if (!req.body.empty()) {
      const json body = json::parse(req.body);
      if (body.contains("title") && body["title"].is_string()) title = body["title"].get<std::string>();
    }
    send_json(res, 201, session_to_json(store_.create_session(title)));
  });

  srv.Get("/api/v1/sessions/:id", [this](const httplib::Request& req, httplib::Response& res) {
    auto snap = store_.snapshot(req.path_params.at("id"));
    json out = session_to_json(snap->session);
    out["version"] = snap->version;
    send_json(res, 200, out);
  });

  srv.Get("/api/v1/sessions/:id/graph", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.path_params.at("id");
    if (!store_.find_session(id)) throw NotFoundError("unknown session " + id);
    const BuildParams params = parse_build_params(query_of(req), default_params());
    auto doc = graph_document(id, params);
    res.status = 200;
    res.set_content(*doc, "application/json");
  });

  srv.Post("/api/v1/sessions/:id/generate", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.path_params.at("id");
    if (!store_.find_session(id)) throw NotFoundError("unknown session " + id);
    const json body = json::parse(req.body);
    if (!body.is_object() || !body.contains("prompt") || !body["prompt"].is_string()) {
      throw ParamError("generate needs a string 'prompt'");
    }
    GenerationRequest request;
    request.prompt = body["prompt"].get<std::string>();
    request.n = body.value("n", 1);
    request.seed = body.value("seed", static_cast<std::int64_t>(config_.seed));
    request.width = body.value("width", 512);
    request.height = body.value("height", 512);
    const GenerationJob job = submit(id, request);
    send_json(res, 202, job_to_json(job));
  });

  srv.Get("/api/v1/sessions/:id/jobs/:job", [this](const httplib::Request& req, httplib::Response& res) {
    auto job = this->job(req.path_params.at("job"));
    if (!job || job->session_id != req.path_params.at("id")) {
      throw NotFoundError("unknown job " + req.path_params.at("job"));
    }
    send_json(res, 200, job_to_json(*job));
  });

  srv.Get("/api/v1/sessions/:id/history", [this](const httplib::Request& req, httplib::Response& res) {
    auto snap = store_.snapshot(req.path_params.at("id"));
    send_json(res, 200, history_document(*snap, s_min_param(req, default_params().graph.s_min)));
  });

  srv.Get("/api/v1/sessions/:id/stages", [this](const httplib::Request& req, httplib::Response& res) {
    auto snap = store_.snapshot(req.path_params.at("id"));
    json out = stages_to_json(session_stages(*snap, s_min_param(req, default_params().graph.s_min)));
    out["version"] = snap->version;
    send_json(res, 200, out);
  });

  srv.Patch("/api/v1/sessions/:id/stages", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.path_params.at("id");
    auto snap = store_.snapshot(id);
    const double s_min = s_min_param(req, default_params().graph.s_min);
    const StageCommand cmd = stage_command_from_json(json::parse(req.body));
    // Validate against the current segmentation before persisting.
    apply_stage_command(session_stages(*snap, s_min), snap->steps.size(), cmd);
    store_.append_stage_override(id, cmd);
    auto updated = store_.snapshot(id);
    json out = stages_to_json(session_stages(*updated, s_min));
    out["version"] = updated->version;
    send_json(res, 200, out);
  });

  srv.Get("/api/v1/sessions/:id/assets/:file", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string file = req.path_params.at("file");
    if (file.size() < 5 || file.substr(file.size() - 4) != ".png") throw NotFoundError("unknown asset " + file);
    auto snap = store_.snapshot(req.path_params.at("id"));
    const Bytes bytes = snap->read_asset(file.substr(0, file.size() - 4));
    res.status = 200;
    res.set_header("Cache-Control", "public, max-age=31536000, immutable");
    res.set_content(reinterpret_cast<const char*>(bytes.data()), bytes.size(), "image/png");
  });

  if (config_.ui_dir) srv.set_mount_point("/", config_.ui_dir->string());
}

}  // namespace ivg
