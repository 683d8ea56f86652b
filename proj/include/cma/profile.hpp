#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>

#include "cma/backing.hpp"

namespace cma {

// Size distribution and peak live-allocation count of one instrumented run.
// Sizes are kept exactly; binning happens only when reporting.
class AllocationProfile {
 public:
  static constexpr std::size_t kDefaultCutoff = 4096;

  explicit AllocationProfile(std::size_t cutoff = kDefaultCutoff);

  // Sizes at or above the cutoff are left out of the distribution but still
  // count towards the live total.
  void record_allocation(std::size_t size);
  void record_free();

  // Builds a profile directly (used by the loader and by synthetic setups).
  // Throws Validation if an entry violates the cutoff or the totals disagree.
  static AllocationProfile from_counts(std::map<std::size_t, std::uint64_t> counts,
                                       std::uint64_t peak_live,
                                       std::size_t cutoff = kDefaultCutoff,
                                       std::uint64_t observed = 0);

  const std::map<std::size_t, std::uint64_t>& counts() const { return counts_; }
  std::size_t cutoff() const { return cutoff_; }
  std::uint64_t total_recorded() const { return total_recorded_; }
  std::uint64_t observed() const { return observed_; }
  std::uint64_t peak_live() const { return peak_live_; }
  std::uint64_t live() const { return live_; }
  bool empty() const { return total_recorded_ == 0; }

  // Power-of-two bins keyed by their inclusive upper bound (8, 16, 32, ...).
  std::map<std::size_t, std::uint64_t> binned() const;

  // The live counter is recorder state and does not take part.
  friend bool operator==(const AllocationProfile& a, const AllocationProfile& b) {
    return a.counts_ == b.counts_ && a.cutoff_ == b.cutoff_ && a.observed_ == b.observed_ &&
           a.peak_live_ == b.peak_live_;
  }

 private:
  std::map<std::size_t, std::uint64_t> counts_;
  std::size_t cutoff_;
  std::uint64_t total_recorded_ = 0;
  std::uint64_t observed_ = 0;
  std::uint64_t peak_live_ = 0;
  std::uint64_t live_ = 0;
};

std::string format_profile(const AllocationProfile& profile);
AllocationProfile parse_profile(std::string_view text);

void save_profile(const AllocationProfile& profile, const std::filesystem::path& path);
AllocationProfile load_profile(const std::filesystem::path& path);

// Records every request passing through to the wrapped allocator.
class ProfilingBacking final : public BackingAllocator {
 public:
  ProfilingBacking(AllocationProfile& profile, BackingAllocator& inner = system_backing())
      : profile_(&profile), inner_(&inner) {}

  void* allocate(std::size_t size, std::size_t alignment = 16) override;
  void deallocate(void* p) noexcept override;
  std::string name() const override { return inner_->name(); }

 private:
  AllocationProfile* profile_;
  BackingAllocator* inner_;
};

}  // namespace cma
