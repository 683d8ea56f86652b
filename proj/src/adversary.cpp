#include "cma/adversary.hpp"

#include <algorithm>
#include <cmath>
#include <new>

#include "cma/error.hpp"

namespace cma {

void AdversarialConfig::validate() const {
  if (!(multiplier >= 0.0) || !std::isfinite(multiplier))
    fail(ErrorCode::InvalidArgument, "adversarial multiplier must be a finite non-negative number");
  if (!(occupancy >= 0.0 && occupancy < 1.0))
    fail(ErrorCode::InvalidArgument, "adversarial occupancy must lie in [0, 1)");
}

AdversarialConfig adversarial_preset(std::string_view name, std::uint64_t seed) {
  if (name == "adv0") return {"adv0", 0.0, 0.0, seed};
  if (name == "adv1") return {"adv1", 1.0, 0.33, seed};
  if (name == "adv3") return {"adv3", 3.0, 0.66, seed};
  if (name == "adv10") return {"adv10", 10.0, 0.8, seed};
  fail(ErrorCode::InvalidArgument, "unknown adversarial preset '" + std::string(name) +
                                       "' (expected adv0, adv1, adv3 or adv10)");
}

std::vector<std::string> adversarial_preset_names() { return {"adv0", "adv1", "adv3", "adv10"}; }

std::uint64_t round_count(long double value) {
  const long double snapped = std::round(value * 1e6L) / 1e6L;
  return static_cast<std::uint64_t>(std::floor(snapped + 0.5L));
}

std::uint64_t preconditioning_allocations(const AdversarialConfig& config,
                                          std::uint64_t peak_live) {
  return round_count(static_cast<long double>(config.multiplier) * peak_live);
}

std::uint64_t preconditioning_frees(std::uint64_t allocations, double occupancy) {
  return std::min(allocations,
                  round_count(static_cast<long double>(allocations) * (1.0L - occupancy)));
}

SizeSampler::SizeSampler(const AllocationProfile& profile) {
  if (profile.empty()) fail(ErrorCode::Sampling, "cannot sample sizes from an empty profile");
  std::uint64_t running = 0;
  for (auto [size, count] : profile.counts()) {
    running += count;
    cumulative_.push_back(running);
    sizes_.push_back(size);
  }
}

std::size_t SizeSampler::operator()(Rng& rng) const {
  const std::uint64_t r = rng.below(cumulative_.back());
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), r);
  return sizes_[static_cast<std::size_t>(it - cumulative_.begin())];
}

std::size_t sample_random_size(const AllocationProfile& profile, Rng& rng) {
  return SizeSampler(profile)(rng);
}

void LiveLedger::release(BackingAllocator& backing) noexcept {
  for (void* p : live_) backing.deallocate(p);
  live_.clear();
}

LiveLedger precondition(const AdversarialConfig& config, const AllocationProfile& profile,
                        BackingAllocator& backing) {
  config.validate();
  if (config.is_noop()) return {};
  if (profile.empty() || profile.peak_live() == 0)
    fail(ErrorCode::Precondition, "adversarial allocation needs a non-empty profile");

  const std::uint64_t n = preconditioning_allocations(config, profile.peak_live());
  const std::uint64_t m = preconditioning_frees(n, config.occupancy);
  Rng rng(mix_seed(config.seed, 0xAD));
  SizeSampler sampler(profile);

  std::vector<void*> objects;
  try {
    objects.reserve(n);
  } catch (const std::bad_alloc&) {
    fail(ErrorCode::Precondition, "cannot hold " + std::to_string(n) + " preconditioning objects");
  }
  for (std::uint64_t i = 0; i < n; ++i) {
    void* p = backing.allocate(sampler(rng));
    if (p == nullptr) {
      for (void* q : objects) backing.deallocate(q);
      fail(ErrorCode::Precondition, "backing allocator exhausted after " + std::to_string(i) +
                                        " of " + std::to_string(n) + " preconditioning objects");
    }
    // Touch the object so the allocator has to commit its placement.
    *static_cast<volatile unsigned char*>(p) = static_cast<unsigned char>(i);
    objects.push_back(p);
  }

  shuffle(std::span<void*>(objects), rng);
  for (std::uint64_t i = 0; i < m; ++i) backing.deallocate(objects[i]);
  objects.erase(objects.begin(), objects.begin() + static_cast<std::ptrdiff_t>(m));
  return LiveLedger(std::move(objects), n, m);
}

}  // namespace cma
