#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "cma/backing.hpp"
#include "cma/profile.hpp"
#include "cma/region.hpp"
#include "cma/rng.hpp"

namespace cma {

struct SizeModel {
  enum class Kind { Fixed, Uniform, Profile };

  Kind kind = Kind::Fixed;
  std::size_t min = 32;  // the fixed size for Kind::Fixed
  std::size_t max = 32;
  std::shared_ptr<const AllocationProfile> profile;
  std::string profile_path;

  static SizeModel fixed(std::size_t bytes) { return {Kind::Fixed, bytes, bytes, nullptr, {}}; }
  static SizeModel uniform(std::size_t lo, std::size_t hi) { return {Kind::Uniform, lo, hi, nullptr, {}}; }
  static SizeModel sampled(std::shared_ptr<const AllocationProfile> p, std::string path = {});

  bool is_fixed() const { return kind == Kind::Fixed; }
  std::size_t smallest() const;
};

// Draws object sizes for one workload stream.
class SizeStream {
 public:
  SizeStream(const SizeModel& model, std::uint64_t seed);
  std::size_t next();

 private:
  const SizeModel* model_;
  Rng rng_;
  std::vector<std::uint64_t> cumulative_;
  std::vector<std::size_t> sizes_;
};

struct WorkloadSpec {
  std::string name = "list-churn";
  std::uint64_t object_count = 100000;
  SizeModel size = SizeModel::fixed(32);
  std::uint32_t traversal_passes = 10;
  double churn_ratio = 0.0;
  std::uint64_t seed = 1;
  std::uint32_t phases = 1;  // region-phases
  std::uint32_t depth = 64;  // stack-parse maximum nesting
};

struct AllocatorSettings {
  std::size_t chunk_size = 65536;
  ChunkGrowth growth = ChunkGrowth::Fixed;
  std::size_t objects_per_chunk = 256;
  std::size_t stack_capacity = std::size_t{64} << 20;
};

struct WorkloadResult {
  std::uint64_t checksum = 0;
  // Object addresses in first-traversal order.
  std::vector<std::uintptr_t> trace;
  std::size_t trace_object_size = 0;
  std::uint64_t objects_allocated = 0;
  std::uint64_t aligned_bytes = 0;
  std::uint64_t visits = 0;
  // StackHeap cursor after the workload finished (custom stack-parse only).
  std::size_t final_stack_top = 0;
};

std::vector<std::string> workload_names();
bool is_workload_name(std::string_view name);
// Desk-scale defaults for each named workload.
WorkloadSpec default_workload(std::string_view name);

WorkloadResult run_list_churn(const WorkloadSpec& spec, AllocatorMode mode,
                              BackingAllocator& backing, const AllocatorSettings& settings = {});
WorkloadResult run_stack_parse(const WorkloadSpec& spec, AllocatorMode mode,
                               BackingAllocator& backing, const AllocatorSettings& settings = {});
WorkloadResult run_pool_churn(const WorkloadSpec& spec, AllocatorMode mode,
                              BackingAllocator& backing, const AllocatorSettings& settings = {});
WorkloadResult run_region_phases(const WorkloadSpec& spec, AllocatorMode mode,
                                 BackingAllocator& backing, const AllocatorSettings& settings = {});
WorkloadResult run_class_churn(const WorkloadSpec& spec, AllocatorMode mode,
                               BackingAllocator& backing, const AllocatorSettings& settings = {});

// Dispatches on spec.name.
WorkloadResult run_workload(const WorkloadSpec& spec, AllocatorMode mode,
                            BackingAllocator& backing, const AllocatorSettings& settings = {});

// Object sizes region-phases requests in the given phase, before alignment.
std::vector<std::size_t> region_phase_sizes(const WorkloadSpec& spec, std::uint32_t phase);

std::string format_workload_config(const WorkloadSpec& spec);
WorkloadSpec parse_workload_config(std::string_view text,
                                   const std::filesystem::path& base_dir = {});
WorkloadSpec load_workload_config(const std::filesystem::path& path);

}  // namespace cma
