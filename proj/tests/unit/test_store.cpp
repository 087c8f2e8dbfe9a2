#include <doctest.h>

#include <fstream>
#include <set>
#include <thread>

#include "ivg/hashing.hpp"
#include "ivg/store.hpp"
#include "tempdir.hpp"

using namespace ivg;
namespace fs = std::filesystem;

namespace {

Bytes blob(const std::string& s) { return Bytes(s.begin(), s.end()); }

}  // namespace

TEST_CASE("sessions") {
  testing::TempDir dir;
  ProvenanceStore store(dir.path());
  auto a = store.create_session("portraits");
  auto b = store.create_session("portraits");
  auto c = store.create_session("");
  CHECK(a.id != b.id);
  CHECK(a.step_count == 0);
  CHECK(c.title == "Untitled session");
  CHECK(store.list_sessions().size() == 3);
  CHECK(store.find_session(a.id)->title == "portraits");
  CHECK_FALSE(store.find_session("nope").has_value());
  CHECK_THROWS_AS(store.snapshot("nope"), NotFoundError);
  auto empty = store.snapshot(a.id);
  CHECK(empty->steps.empty());
  CHECK(fs::exists(dir.path() / "sessions" / a.id / "session.json"));
}

TEST_CASE("append and snapshot") {
  testing::TempDir dir;
  ProvenanceStore store(dir.path());
  auto s = store.create_session("t");
  GenerationParams params;
  params.seed = 7;
  params.batch_size = 4;
  auto first = store.append_step(s.id, "a cat", params, {blob("1"), blob("2"), blob("3"), blob("4")});
  CHECK(first.order == 1);
  CHECK(first.image_ids.size() == 4);
  CHECK(first.image_ids[0] == sha256_hex(std::string_view("1")));

  auto before = store.snapshot(s.id);
  auto again = store.snapshot(s.id);
  CHECK(before->version == again->version);
  CHECK(before->steps.size() == again->steps.size());

  auto second = store.append_step(s.id, "a dog", params, {blob("1")});
  CHECK(second.order == 2);
  CHECK(before->steps.size() == 1);
  CHECK(store.snapshot(s.id)->steps.size() == 2);
  CHECK(store.snapshot(s.id)->version > before->version);
  CHECK(store.snapshot(s.id)->read_asset(first.image_ids[1]) == blob("2"));
  CHECK(store.find_session(s.id)->step_count == 2);

  SUBCASE("identical bytes are stored once") {
    std::size_t files = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir.path() / "sessions" / s.id / "assets")) ++files;
    CHECK(files == 4);
  }
  SUBCASE("reopen restores everything") {
    store.append_stage_override(s.id, {StageCommandKind::split, 2});
    ProvenanceStore reopened(dir.path());
    auto snap = reopened.snapshot(s.id);
    REQUIRE(snap->steps.size() == 2);
    CHECK(snap->steps[0].prompt == "a cat");
    CHECK(snap->steps[0].params.seed == 7);
    CHECK(snap->steps[0].params.batch_size == 4);
    CHECK(snap->steps[1].image_ids == second.image_ids);
    REQUIRE(snap->overrides.size() == 1);
    CHECK(snap->overrides[0] == StageCommand{StageCommandKind::split, 2});
  }
  CHECK_THROWS_AS(store.append_step("missing", "x", params, {}), NotFoundError);
}

TEST_CASE("concurrent writers get consecutive orders") {
  testing::TempDir dir;
  ProvenanceStore store(dir.path());
  auto s = store.create_session("race");
  constexpr int per_writer = 25;
  auto writer = [&](int id) {
    for (int k = 0; k < per_writer; ++k) {
      store.append_step(s.id, "writer " + std::to_string(id), {}, {blob(std::to_string(id * 1000 + k))});
    }
  };
  std::thread w1(writer, 1), w2(writer, 2);
  w1.join();
  w2.join();
  auto snap = store.snapshot(s.id);
  REQUIRE(snap->steps.size() == 2 * per_writer);
  for (std::size_t i = 0; i < snap->steps.size(); ++i) CHECK(snap->steps[i].order == static_cast<int>(i + 1));
  ProvenanceStore reopened(dir.path());
  CHECK(reopened.snapshot(s.id)->steps.size() == 2 * per_writer);
}

TEST_CASE("crash recovery") {
  testing::TempDir dir;
  std::string id;
  {
    ProvenanceStore store(dir.path());
    id = store.create_session("crash").id;
    store.append_step(id, "kept", {}, {blob("a")});
  }
  const fs::path log = dir.path() / "sessions" / id / "steps.log";

  SUBCASE("torn final line is discarded") {
    std::ofstream(log, std::ios::app) << "{\"id\":\"torn\",\"order\":2,\"prom";
    ProvenanceStore store(dir.path());
    auto snap = store.snapshot(id);
    REQUIRE(snap->steps.size() == 1);
    auto next = store.append_step(id, "after", {}, {blob("b")});
    CHECK(next.order == 2);
    ProvenanceStore again(dir.path());
    CHECK(again.snapshot(id)->steps.size() == 2);
  }
  SUBCASE("step with a missing asset is skipped") {
    const std::string ghost = sha256_hex(std::string_view("ghost"));
    std::ofstream(log, std::ios::app) << "{\"id\":\"x\",\"order\":2,\"prompt\":\"p\",\"images\":[{\"id\":\""
                                      << ghost << "\",\"bytes\":5}]}\n";
    ProvenanceStore store(dir.path());
    auto snap = store.snapshot(id);
    REQUIRE(snap->steps.size() == 1);
    for (const auto& step : snap->steps) {
      for (const auto& img : step.image_ids) CHECK(fs::exists(snap->asset(img).path));
    }
  }
}

TEST_CASE("remove session") {
  testing::TempDir dir;
  ProvenanceStore store(dir.path());
  auto s = store.create_session("gone");
  store.remove_session(s.id);
  CHECK_FALSE(store.find_session(s.id).has_value());
  CHECK_FALSE(fs::exists(dir.path() / "sessions" / s.id));
}
