#include <doctest.h>

#include <cmath>
#include <random>

#include "ivg/embedding.hpp"
#include "ivg/projection.hpp"
#include "oracles.hpp"

using namespace ivg;

namespace {

Vector unit(Vector v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  s = std::sqrt(s);
  for (double& x : v) x /= s;
  return v;
}

// Two well-separated Gaussian blobs in 512-d.
std::vector<Vector> two_blobs(std::uint64_t seed, std::size_t per_blob) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 0.05);
  const Vector a = seeded_unit_vector(seed * 2 + 1, kEmbeddingDim);
  const Vector b = seeded_unit_vector(seed * 2 + 2, kEmbeddingDim);
  std::vector<Vector> out;
  for (const Vector* centre : {&a, &b}) {
    for (std::size_t i = 0; i < per_blob; ++i) {
      Vector v = *centre;
      for (double& x : v) x += noise(rng);
      out.push_back(unit(v));
    }
  }
  return out;
}

}  // namespace

TEST_CASE("perplexity rule") {
  CHECK(perplexity_for(5) == 2);
  CHECK(perplexity_for(10) == 3);
  CHECK(perplexity_for(40) == 13);
  CHECK(perplexity_for(500) == 30);
}

TEST_CASE("cosine distances") {
  auto d = cosine_distance_matrix({{1, 0}, {0, 1}, {-1, 0}, {0, 0}});
  CHECK(d[0 * 4 + 1] == doctest::Approx(1.0));
  CHECK(d[0 * 4 + 2] == doctest::Approx(2.0));
  CHECK(d[0 * 4 + 0] == doctest::Approx(0.0));
  CHECK(d[3 * 4 + 0] == doctest::Approx(1.0));
  CHECK(d[3 * 4 + 3] == doctest::Approx(0.0));
}

TEST_CASE("small sets use distance scaling") {
  SUBCASE("two distinct vectors") {
    auto p = project({{1, 0, 0}, {0, 1, 0}});
    REQUIRE(p.size() == 2);
    CHECK(distance(p[0], p[1]) > 0.1);
  }
  SUBCASE("identical vectors collapse to the origin") {
    auto p = project({{1, 2, 3}, {1, 2, 3}, {1, 2, 3}});
    for (const auto& q : p) {
      CHECK(q.x == 0.0);
      CHECK(q.y == 0.0);
    }
    auto big = project(std::vector<Vector>(8, Vector{0.3, 0.4}));
    for (const auto& q : big) CHECK(distance(q, {0, 0}) == 0.0);
  }
  SUBCASE("mds reproduces planar distances") {
    PointSet truth = {{0, 0}, {3, 0}, {0, 4}, {3, 4}};
    std::vector<double> d(16);
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 4; ++j) d[i * 4 + j] = distance(truth[i], truth[j]);
    }
    auto p = classical_mds(d, 4);
    for (std::size_t i = 0; i < 4; ++i) {
      for (std::size_t j = 0; j < 4; ++j) CHECK(distance(p[i], p[j]) == doctest::Approx(d[i * 4 + j]));
    }
  }
  SUBCASE("single vector") {
    auto p = project({{1, 0}});
    REQUIRE(p.size() == 1);
    CHECK(std::isfinite(p[0].x));
  }
}

TEST_CASE("blobs stay separated") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    auto vecs = two_blobs(seed, 20);
    ProjectionOptions opts;
    opts.seed = seed;
    auto p = project(vecs, opts);
    std::vector<int> labels(40);
    for (std::size_t i = 20; i < 40; ++i) labels[i] = 1;
    CHECK(oracle::silhouette(p, labels) > 0.5);
    for (const auto& q : p) {
      CHECK(std::isfinite(q.x));
      CHECK(std::isfinite(q.y));
    }
  }
}

TEST_CASE("projection is reproducible") {
  auto vecs = two_blobs(9, 12);
  ProjectionOptions opts;
  opts.seed = 5;
  auto a = project(vecs, opts);
  auto b = project(vecs, opts);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].x == b[i].x);
    CHECK(a[i].y == b[i].y);
  }
  opts.seed = 6;
  auto c = project(vecs, opts);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs = differs || !(a[i] == c[i]);
  CHECK(differs);
}

TEST_CASE("seeded starts keep shared points near their old positions") {
  auto vecs = two_blobs(4, 10);
  ProjectionOptions opts;
  auto first = standardize(project(vecs, opts));
  std::vector<std::optional<Point2>> init(first.begin(), first.end());
  auto more = vecs;
  auto extra = two_blobs(5, 2);
  more.insert(more.end(), extra.begin(), extra.end());
  init.resize(more.size());
  opts.seed = 77;
  auto second = project(more, opts, &init);
  REQUIRE(second.size() == more.size());
  for (const auto& q : second) CHECK(std::isfinite(q.x));
}

TEST_CASE("standardize") {
  auto s = standardize({{1, 1}, {3, 1}, {1, 3}, {3, 3}});
  double rms = 0.0;
  for (const auto& p : s) rms += p.x * p.x + p.y * p.y;
  CHECK(std::sqrt(rms / 4) == doctest::Approx(1.0));
  CHECK(centroid(s).x == doctest::Approx(0.0));
  auto same = standardize({{2, 2}, {2, 2}});
  CHECK(same[0] == Point2{0, 0});
}

TEST_CASE("combine") {
  PointSet t = {{0, 0}, {1, -1}, {5, 2}};
  PointSet i = {{2, 4}, {-3, 0.5}, {5, -2}};
  CHECK(combine(t, i, 1.0) == t);
  CHECK(combine(t, i, 0.0) == i);
  auto mid = combine({{0, 0}}, {{2, 4}}, 0.5);
  CHECK(mid[0].x == doctest::Approx(1.0));
  CHECK(mid[0].y == doctest::Approx(2.0));
  CHECK_THROWS_AS(combine(t, i, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(combine(t, i, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(combine(t, {{0, 0}}, 0.5), std::invalid_argument);

  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-10, 10), a01(0, 1);
  for (int trial = 0; trial < 500; ++trial) {
    PointSet x = {{u(rng), u(rng)}}, y = {{u(rng), u(rng)}};
    const double alpha = a01(rng);
    auto c = combine(x, y, alpha)[0];
    CHECK(c.x >= std::min(x[0].x, y[0].x) - 1e-12);
    CHECK(c.x <= std::max(x[0].x, y[0].x) + 1e-12);
    CHECK(c.y >= std::min(x[0].y, y[0].y) - 1e-12);
    CHECK(c.y <= std::max(x[0].y, y[0].y) + 1e-12);
  }
}
