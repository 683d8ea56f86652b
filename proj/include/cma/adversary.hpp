#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "cma/backing.hpp"
#include "cma/profile.hpp"
#include "cma/rng.hpp"

namespace cma {

// Controls synthetic heap fragmentation: allocate multiplier x peak_live
// profile-sized objects, shuffle them, free all but an occupancy fraction.
struct AdversarialConfig {
  std::string name = "custom";
  double multiplier = 0.0;
  double occupancy = 0.0;
  std::uint64_t seed = 0;

  bool is_noop() const { return multiplier == 0.0; }
  void validate() const;
};

// adv0, adv1, adv3, adv10.
AdversarialConfig adversarial_preset(std::string_view name, std::uint64_t seed = 0);
std::vector<std::string> adversarial_preset_names();

// Rounds half up after snapping away binary representation noise (at the 1e-6
// level), so 25 x (1 - 0.66) is 8.5 -> 9 rather than 8.4999... -> 8.
std::uint64_t round_count(long double value);

std::uint64_t preconditioning_allocations(const AdversarialConfig& config, std::uint64_t peak_live);
std::uint64_t preconditioning_frees(std::uint64_t allocations, double occupancy);

// Draws sizes with probability proportional to their recorded counts.
class SizeSampler {
 public:
  explicit SizeSampler(const AllocationProfile& profile);
  std::size_t operator()(Rng& rng) const;

 private:
  std::vector<std::uint64_t> cumulative_;
  std::vector<std::size_t> sizes_;
};

std::size_t sample_random_size(const AllocationProfile& profile, Rng& rng);

// Objects left live by preconditioning. They stay allocated for the rest of
// the process; release() exists for leak-checked test builds only.
class LiveLedger {
 public:
  LiveLedger() = default;
  LiveLedger(std::vector<void*> live, std::uint64_t allocations, std::uint64_t frees)
      : live_(std::move(live)), allocations_(allocations), frees_(frees) {}

  const std::vector<void*>& live() const { return live_; }
  std::uint64_t allocations() const { return allocations_; }
  std::uint64_t frees() const { return frees_; }

  void release(BackingAllocator& backing) noexcept;

 private:
  std::vector<void*> live_;
  std::uint64_t allocations_ = 0;
  std::uint64_t frees_ = 0;
};

// Throws Precondition when the profile is empty or the backing allocator
// runs out; everything allocated so far is returned before throwing.
LiveLedger precondition(const AdversarialConfig& config, const AllocationProfile& profile,
                        BackingAllocator& backing);

}  // namespace cma
