#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace cma {

// Deterministic stand-ins for cache-miss counters, computed from the order in
// which a workload traversed its objects.
struct LocalityReport {
  std::uint64_t objects = 0;
  std::uint64_t unique_lines = 0;  // distinct line_size-aligned lines touched
  double lines_per_object = 0.0;
  double mean_traversal_gap = 0.0;  // mean |a[i+1] - a[i]| in bytes
  std::uint64_t span = 0;           // max - min address in bytes
  std::size_t line_size = 64;
  std::size_t object_size = 0;

  friend bool operator==(const LocalityReport&, const LocalityReport&) = default;
};

// Throws Analysis on an empty trace, a zero object size or a line size that
// is not a power of two.
LocalityReport analyze_trace(std::span<const std::uintptr_t> trace, std::size_t object_size,
                             std::size_t line_size = 64);

// Offsets from the line holding the lowest address, so line membership is
// preserved while absolute addresses drop out.
std::vector<std::uintptr_t> normalize_trace(std::span<const std::uintptr_t> trace,
                                            std::size_t line_size = 64);

// Spearman rank correlation with average ranks for ties. Returns 0 when
// either series is constant (no monotone association to measure).
double spearman(std::span<const double> x, std::span<const double> y);

// |rho| below this is not significant at the two-sided 5% level (t
// approximation with n - 2 degrees of freedom).
double spearman_critical_value(std::size_t n);

}  // namespace cma
