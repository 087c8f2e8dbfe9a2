#include "ivg/embedding.hpp"

#include <cmath>
#include <future>
#include <random>
#include <set>

#include "ivg/prompt.hpp"

namespace ivg {

Vector seeded_unit_vector(std::uint64_t seed, std::size_t dimension) {
  std::mt19937_64 rng(seed);
  Vector v(dimension);
  double norm2 = 0.0;
  for (auto& x : v) {
    // 53 random bits mapped to [-1, 1).
    x = static_cast<double>(rng() >> 11) * 0x1.0p-52 - 1.0;
    norm2 += x * x;
  }
  const double inv = 1.0 / std::sqrt(norm2);
  for (auto& x : v) x *= inv;
  return v;
}

double cosine_similarity(const Vector& a, const Vector& b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  const std::size_t n = std::min(a.size(), b.size());
  for (std::size_t i = 0; i < n; ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / std::sqrt(na * nb);
}

Vector StubEmbeddingProvider::text_vector(const std::string& prompt) const {
  const PromptTokens parsed = parse_prompt(prompt);
  if (parsed.tokens.empty()) return seeded_unit_vector(stable_seed("token:"), dimension_);
  Vector sum(dimension_, 0.0);
  for (const auto& token : parsed.tokens) {
    const Vector t = seeded_unit_vector(stable_seed("token:" + token.text), dimension_);
    for (std::size_t i = 0; i < dimension_; ++i) sum[i] += t[i];
  }
  double norm2 = 0.0;
  for (double x : sum) norm2 += x * x;
  const double inv = 1.0 / std::sqrt(norm2);
  for (auto& x : sum) x *= inv;
  return sum;
}

Vector StubEmbeddingProvider::image_vector(std::span<const std::uint8_t> bytes) const {
  return seeded_unit_vector(stable_seed(bytes), dimension_);
}

EmbeddingBatch StubEmbeddingProvider::embed(const std::vector<std::string>& texts,
                                            const std::vector<std::shared_ptr<const Bytes>>& images) {
  EmbeddingBatch batch;
  batch.text_vecs.reserve(texts.size());
  for (const auto& t : texts) batch.text_vecs.push_back(text_vector(t));
  batch.image_vecs.reserve(images.size());
  for (const auto& img : images) {
    if (!img) throw EmbeddingError("missing image bytes");
    batch.image_vecs.push_back(image_vector(*img));
  }
  return batch;
}

std::optional<Vector> EmbeddingCache::find(const std::string& key) const {
  std::lock_guard lock(mutex_);
  if (auto it = entries_.find(key); it != entries_.end()) return it->second;
  return std::nullopt;
}

void EmbeddingCache::insert(const std::string& key, Vector value) {
  std::lock_guard lock(mutex_);
  entries_.insert_or_assign(key, std::move(value));
}

std::size_t EmbeddingCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

namespace {

struct Job {
  std::vector<std::string> keys;
  std::vector<std::string> texts;
  std::vector<std::shared_ptr<const Bytes>> images;
};

struct JobOutcome {
  std::map<std::string, Vector> vectors;
  std::map<std::string, std::string> failures;
};

void check_vectors(const std::vector<Vector>& vecs, std::size_t expected, std::size_t dim) {
  if (vecs.size() != expected) throw EmbeddingError("provider returned wrong number of vectors");
  for (const auto& v : vecs) {
    if (v.size() != dim) throw EmbeddingError("provider returned wrong vector dimension");
    for (double x : v) {
      if (!std::isfinite(x)) throw EmbeddingError("provider returned non-finite component");
    }
  }
}

JobOutcome run_job(const Job& job, EmbeddingProvider& provider) {
  JobOutcome outcome;
  try {
    EmbeddingBatch batch = provider.embed(job.texts, job.images);
    check_vectors(batch.text_vecs, job.texts.size(), provider.dimension());
    check_vectors(batch.image_vecs, job.images.size(), provider.dimension());
    std::size_t k = 0;
    for (auto& v : batch.text_vecs) outcome.vectors.emplace(job.keys[k++], std::move(v));
    for (auto& v : batch.image_vecs) outcome.vectors.emplace(job.keys[k++], std::move(v));
  } catch (const std::exception& e) {
    for (const auto& key : job.keys) outcome.failures.emplace(key, e.what());
  }
  return outcome;
}

}  // namespace

EmbedResult embed_records(const std::vector<EmbeddingRecord>& records, EmbeddingProvider& provider,
                          EmbeddingCache* cache, const EmbedOptions& options) {
  const std::size_t batch_size = std::max<std::size_t>(1, options.batch_size);
  std::vector<std::string> text_keys(records.size());
  std::vector<std::string> image_keys(records.size());
  std::map<std::string, Vector> resolved;
  std::map<std::string, std::string> failures;

  std::vector<Job> jobs;
  std::set<std::string> queued;
  auto job_for = [&](bool text) -> Job& {
    // Text and image requests travel in separate batches.
    for (auto it = jobs.rbegin(); it != jobs.rend(); ++it) {
      const bool is_text = !it->texts.empty();
      if (is_text == text && it->keys.size() < batch_size) return *it;
    }
    return jobs.emplace_back();
  };

  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    text_keys[r] = "text:" + sha256_hex(rec.prompt);
    if (rec.image) {
      image_keys[r] = "image:" + sha256_hex(std::span<const std::uint8_t>(*rec.image));
    } else {
      image_keys[r] = "image:missing:" + rec.image_id;
      failures.emplace(image_keys[r], "record has no image bytes");
    }

    for (bool text : {true, false}) {
      const std::string& key = text ? text_keys[r] : image_keys[r];
      if (resolved.count(key) || failures.count(key) || queued.count(key)) continue;
      if (cache) {
        if (auto hit = cache->find(key)) {
          resolved.emplace(key, std::move(*hit));
          continue;
        }
      }
      Job& job = job_for(text);
      job.keys.push_back(key);
      if (text) job.texts.push_back(rec.prompt);
      else job.images.push_back(rec.image);
      queued.insert(key);
    }
  }

  const std::size_t width = std::max<std::size_t>(1, options.max_concurrency);
  for (std::size_t start = 0; start < jobs.size(); start += width) {
    std::vector<std::future<JobOutcome>> running;
    for (std::size_t j = start; j < std::min(jobs.size(), start + width); ++j) {
      running.push_back(std::async(std::launch::async, run_job, std::cref(jobs[j]),
                                   std::ref(provider)));
    }
    for (auto& f : running) {
      JobOutcome outcome = f.get();
      for (auto& [key, vec] : outcome.vectors) {
        if (cache) cache->insert(key, vec);
        resolved.insert_or_assign(key, std::move(vec));
      }
      failures.merge(outcome.failures);
    }
  }

  EmbedResult result;
  StubEmbeddingProvider fallback(provider.dimension());
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    PairEmbedding pe;
    pe.image_id = rec.image_id;
    bool failed = false;
    for (bool text : {true, false}) {
      const std::string& key = text ? text_keys[r] : image_keys[r];
      Vector& slot = text ? pe.text_vec : pe.image_vec;
      if (auto it = resolved.find(key); it != resolved.end()) {
        slot = it->second;
        continue;
      }
      failed = true;
      auto f = failures.find(key);
      result.errors.push_back({rec.image_id, f != failures.end() ? f->second : "not embedded"});
      if (options.allow_degraded) {
        slot = text ? fallback.text_vector(rec.prompt)
                    : (rec.image ? fallback.image_vector(*rec.image)
                                 : seeded_unit_vector(stable_seed(rec.image_id), provider.dimension()));
      }
    }
    if (failed && options.allow_degraded) result.degraded = true;
    result.embeddings.push_back(std::move(pe));
  }
  if (!result.errors.empty() && !options.allow_degraded) result.embeddings.clear();
  return result;
}

}  // namespace ivg
