#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <vector>

#include "cma/error.hpp"
#include "cma/profile.hpp"
#include "cma/workloads.hpp"
#include "oracles.hpp"

using namespace cma;

namespace {

WorkloadSpec small(const char* name, std::uint64_t objects = 2000) {
  auto spec = default_workload(name);
  spec.object_count = objects;
  return spec;
}

ErrorCode config_code(std::string_view text) {
  try {
    parse_workload_config(text);
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Io;
}

// FNV-style step used for order-sensitive checksums.
std::uint64_t fold(std::uint64_t h, std::uint64_t v) { return (h ^ v) * 0x100000001B3ULL; }

}  // namespace

TEST_SUITE("workloads") {

TEST_CASE("zero objects") {
  for (const auto& name : workload_names()) {
    CAPTURE(name);
    auto spec = small(name.c_str(), 0);
    CountingBacking backing;
    auto r = run_workload(spec, AllocatorMode::Custom, backing);
    CHECK(r.trace.empty());
    CHECK(r.objects_allocated == 0);
    if (name != "pool-churn") CHECK(r.checksum == 0);
  }
}

TEST_CASE("custom and naive modes compute the same checksum") {
  for (const auto& name : workload_names()) {
    for (std::uint64_t seed : {1, 2, 3}) {
      CAPTURE(name);
      CAPTURE(seed);
      auto spec = small(name.c_str());
      spec.seed = seed;
      CountingBacking a, b;
      auto custom = run_workload(spec, AllocatorMode::Custom, a);
      auto naive = run_workload(spec, AllocatorMode::Naive, b);
      CHECK(custom.checksum == naive.checksum);
      CHECK(custom.objects_allocated == naive.objects_allocated);
      CHECK(a.counts().outstanding() == 0);
      CHECK(b.counts().outstanding() == 0);
    }
  }
}

TEST_CASE("list-churn checksum") {
  auto spec = small("list-churn", 500);
  spec.traversal_passes = 3;
  spec.seed = 11;
  std::uint64_t h = 0;
  for (std::uint32_t pass = 0; pass < 3; ++pass)
    for (std::uint64_t i = 0; i < 500; ++i) h = fold(h, mix_seed(11, i));
  CountingBacking backing;
  CHECK(run_list_churn(spec, AllocatorMode::Custom, backing).checksum == h);
}

TEST_CASE("class-churn checksum") {
  auto spec = small("class-churn", 10);
  spec.traversal_passes = 4;
  spec.seed = 5;
  std::uint64_t h = 0;
  for (std::uint64_t round = 0; round < 4; ++round)
    for (std::uint64_t i = 10; i-- > 0;) h = fold(h, mix_seed(5, round * 10 + i));
  CountingBacking backing;
  CHECK(run_class_churn(spec, AllocatorMode::Custom, backing).checksum == h);
  CHECK(backing.counts().allocations == 10);
}

TEST_CASE("region trace follows bump order inside each chunk") {
  auto spec = small("list-churn", 10000);
  oracle::RecordingBacking rec;
  auto r = run_list_churn(spec, AllocatorMode::Custom, rec);
  REQUIRE(r.trace.size() == 10000);
  std::size_t breaks = 0;
  for (std::size_t i = 1; i < r.trace.size(); ++i) {
    if (r.trace[i] == r.trace[i - 1] + 32) continue;
    ++breaks;
  }
  CHECK(breaks + 1 == rec.blocks.size());
}

TEST_CASE("region-phases trace is the first phase") {
  auto spec = small("region-phases", 3000);
  CountingBacking backing;
  auto r = run_region_phases(spec, AllocatorMode::Custom, backing);
  CHECK(r.trace.size() == 3000);
  CHECK(r.objects_allocated == 3000u * spec.phases);
  std::uint64_t bytes = 0;
  for (std::uint32_t ph = 0; ph < spec.phases; ++ph)
    for (auto s : region_phase_sizes(spec, ph)) bytes += oracle::round_up(s, 16);
  CHECK(r.aligned_bytes == bytes);
}

TEST_CASE("one phase costs one backing request per chunk") {
  auto spec = small("region-phases", 20000);
  spec.phases = 1;
  auto sizes = region_phase_sizes(spec, 0);
  auto replay = oracle::replay_region(sizes, 65536);
  CountingBacking custom, naive;
  run_region_phases(spec, AllocatorMode::Custom, custom);
  run_region_phases(spec, AllocatorMode::Naive, naive);
  CHECK(custom.counts().allocations == replay.chunks);
  CHECK(custom.counts().frees == replay.chunks);
  CHECK(naive.counts().allocations == 20000);
  CHECK(naive.counts().frees == 20000);

  spec.phases = 0;
  CountingBacking none;
  run_region_phases(spec, AllocatorMode::Custom, none);
  CHECK(none.counts().allocations == 0);
}

TEST_CASE("stack-parse returns the cursor to the base") {
  auto spec = small("stack-parse", 20000);
  spec.depth = 100;
  CountingBacking custom, naive;
  auto r = run_stack_parse(spec, AllocatorMode::Custom, custom);
  CHECK(r.final_stack_top == 0);
  CHECK(custom.counts().allocations == 1);
  run_stack_parse(spec, AllocatorMode::Naive, naive);
  CHECK(naive.counts().allocations == 20000);
}

TEST_CASE("stack-parse sizing failure") {
  auto spec = small("stack-parse", 20000);
  AllocatorSettings tiny;
  tiny.stack_capacity = 1024;
  CountingBacking backing;
  try {
    run_stack_parse(spec, AllocatorMode::Custom, backing, tiny);
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Workload);
  }
  CHECK(backing.counts().outstanding() == 0);
}

TEST_CASE("pool-churn visits and backing requests") {
  auto spec = small("pool-churn", 10000);
  spec.churn_ratio = 0.0;
  spec.traversal_passes = 3;
  CountingBacking backing;
  auto r = run_pool_churn(spec, AllocatorMode::Custom, backing);
  CHECK(r.visits == 30000);
  CHECK(backing.counts().allocations <= (10000 + 255) / 256 + 1);

  spec.churn_ratio = 0.5;
  CountingBacking churned;
  r = run_pool_churn(spec, AllocatorMode::Custom, churned);
  CHECK(r.visits == 30000);
  CHECK(churned.counts().allocations == (10000 + 255) / 256);
  CHECK(r.objects_allocated == 10000 + 3 * 5000);
}

TEST_CASE("invalid specs") {
  CountingBacking backing;
  auto spec = small("list-churn");
  spec.size = SizeModel::fixed(8);
  CHECK_THROWS_AS(run_list_churn(spec, AllocatorMode::Custom, backing), Error);
  spec = small("pool-churn");
  spec.size = SizeModel::uniform(16, 32);
  CHECK_THROWS_AS(run_pool_churn(spec, AllocatorMode::Custom, backing), Error);
  spec.name = "bogus";
  CHECK_THROWS_AS(run_workload(spec, AllocatorMode::Custom, backing), Error);
  CHECK_THROWS_AS(default_workload("bogus"), Error);
}

TEST_CASE("config round trip") {
  for (const auto& name : workload_names()) {
    auto spec = default_workload(name);
    spec.seed = 99;
    spec.churn_ratio = 0.125;
    auto text = format_workload_config(spec);
    auto back = parse_workload_config(text);
    CHECK(format_workload_config(back) == text);
    CHECK(back.object_count == spec.object_count);
    CHECK(back.seed == 99);
    CHECK(back.churn_ratio == 0.125);
  }
}

TEST_CASE("config keys override defaults") {
  auto spec = parse_workload_config("# comment\nworkload pool-churn\nobject_count 77\nsize fixed 24\n");
  CHECK(spec.name == "pool-churn");
  CHECK(spec.object_count == 77);
  CHECK(spec.size.min == 24);
  CHECK(spec.traversal_passes == default_workload("pool-churn").traversal_passes);
}

TEST_CASE("config errors") {
  CHECK(config_code("object_count 5\n") == ErrorCode::Parse);
  CHECK(config_code("workload nope\n") == ErrorCode::Parse);
  CHECK(config_code("workload list-churn\nobject_count -5\n") == ErrorCode::Parse);
  CHECK(config_code("workload list-churn\nobject_count\n") == ErrorCode::Parse);
  CHECK(config_code("workload list-churn\ncolour blue\n") == ErrorCode::Parse);
  CHECK(config_code("workload list-churn\nsize uniform 64 16\n") == ErrorCode::Parse);
  CHECK(config_code("workload list-churn\nchurn 1.5\n") == ErrorCode::Parse);
  CHECK(config_code("workload list-churn\nworkload list-churn\n") == ErrorCode::Parse);
  CHECK(config_code("workload list-churn\nsize profile /nonexistent/x.profile\n") ==
        ErrorCode::ProfileMissing);
}

TEST_CASE("profile-sized workload") {
  auto dir = std::filesystem::temp_directory_path();
  auto path = dir / "cma_test_sizes.profile";
  save_profile(AllocationProfile::from_counts({{16, 1}, {64, 3}}, 4), path);
  auto spec = parse_workload_config("workload region-phases\nobject_count 4000\nsize profile cma_test_sizes.profile\n", dir);
  std::filesystem::remove(path);
  REQUIRE(spec.size.kind == SizeModel::Kind::Profile);
  auto sizes = region_phase_sizes(spec, 0);
  std::size_t big = 0;
  for (auto s : sizes) {
    REQUIRE((s == 16 || s == 64));
    big += s == 64;
  }
  CHECK(std::abs(static_cast<double>(big) / 4000.0 - 0.75) < 0.03);
}

}  // TEST_SUITE
