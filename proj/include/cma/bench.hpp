#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "cma/adversary.hpp"
#include "cma/backing.hpp"
#include "cma/profile.hpp"
#include "cma/report.hpp"
#include "cma/workloads.hpp"

namespace cma {

struct RunRequest {
  WorkloadSpec workload;
  AllocatorMode mode = AllocatorMode::Custom;
  AdversarialConfig adversary;
  std::shared_ptr<const AllocationProfile> profile;  // required when adversary is not a no-op
  std::uint32_t reps = 7;
  std::size_t line_size = 64;
  AllocatorSettings allocator;
};

// Runs the profiled workload once in naive mode (every object reaches the
// backing allocator) with a recorder attached.
AllocationProfile profile_workload(const WorkloadSpec& spec,
                                   std::size_t cutoff = AllocationProfile::kDefaultCutoff);

// Preconditions the heap of the calling process, then times `reps` workload
// executions against it. The preconditioning objects stay live for the rest
// of the process. Throws ProfileMissing, Precondition or Workload.
RunReport run_configuration(const RunRequest& request,
                            BackingAllocator& backing = system_backing());

// Same as run_configuration, executed in a forked child so the caller's heap
// is left untouched and every call starts from the same heap state. Falls
// back to in-process execution where fork is unavailable.
RunReport run_isolated(const RunRequest& request);

// One row per (occupancy, seed) at a fixed multiplier, each measured in its
// own child process. Failed cells carry their message in RunReport::error.
std::vector<RunReport> sweep_occupancy(const RunRequest& base, double multiplier,
                                       std::span<const double> occupancies,
                                       std::span<const std::uint64_t> seeds);

}  // namespace cma
