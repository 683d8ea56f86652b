#include "cma/locality.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

#include "cma/error.hpp"

namespace cma {

LocalityReport analyze_trace(std::span<const std::uintptr_t> trace, std::size_t object_size,
                             std::size_t line_size) {
  if (trace.empty()) fail(ErrorCode::Analysis, "cannot analyze an empty trace");
  if (object_size == 0) fail(ErrorCode::Analysis, "trace object size must be positive");
  if (!std::has_single_bit(line_size)) fail(ErrorCode::Analysis, "line size must be a power of two");

  const unsigned shift = static_cast<unsigned>(std::countr_zero(line_size));
  std::vector<std::uintptr_t> lines;
  lines.reserve(trace.size() * 2);
  for (std::uintptr_t a : trace) {
    const std::uintptr_t last = (a + object_size - 1) >> shift;
    for (std::uintptr_t l = a >> shift; l <= last; ++l) lines.push_back(l);
  }
  std::sort(lines.begin(), lines.end());
  const auto unique = static_cast<std::uint64_t>(
      std::unique(lines.begin(), lines.end()) - lines.begin());

  long double gap_sum = 0;
  for (std::size_t i = 1; i < trace.size(); ++i)
    gap_sum += trace[i] > trace[i - 1] ? trace[i] - trace[i - 1] : trace[i - 1] - trace[i];

  auto [lo, hi] = std::minmax_element(trace.begin(), trace.end());

  LocalityReport r;
  r.objects = trace.size();
  r.unique_lines = unique;
  r.lines_per_object = static_cast<double>(unique) / static_cast<double>(trace.size());
  r.mean_traversal_gap =
      trace.size() > 1 ? static_cast<double>(gap_sum / static_cast<long double>(trace.size() - 1)) : 0.0;
  r.span = *hi - *lo;
  r.line_size = line_size;
  r.object_size = object_size;
  return r;
}

std::vector<std::uintptr_t> normalize_trace(std::span<const std::uintptr_t> trace,
                                            std::size_t line_size) {
  if (trace.empty()) return {};
  const std::uintptr_t origin = *std::min_element(trace.begin(), trace.end()) & ~(line_size - 1);
  std::vector<std::uintptr_t> out(trace.begin(), trace.end());
  for (auto& a : out) a -= origin;
  return out;
}

namespace {

std::vector<double> ranks(std::span<const double> v) {
  std::vector<std::size_t> idx(v.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
    const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

}  // namespace

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) fail(ErrorCode::Analysis, "spearman series differ in length");
  if (x.size() < 2) return 0.0;
  const auto rx = ranks(x);
  const auto ry = ranks(y);
  const double n = static_cast<double>(x.size());
  const double mean = (n + 1.0) / 2.0;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mean) * (ry[i] - mean);
    sxx += (rx[i] - mean) * (rx[i] - mean);
    syy += (ry[i] - mean) * (ry[i] - mean);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double spearman_critical_value(std::size_t n) {
  // Two-sided 97.5% Student t quantiles for 1..30 degrees of freedom.
  static constexpr double kT975[] = {12.706, 4.303, 3.182, 2.776, 2.571, 2.447, 2.365, 2.306,
                                     2.262,  2.228, 2.201, 2.179, 2.160, 2.145, 2.131, 2.120,
                                     2.110,  2.101, 2.093, 2.086, 2.080, 2.074, 2.069, 2.064,
                                     2.060,  2.056, 2.052, 2.048, 2.045, 2.042};
  if (n < 3) return 1.0;
  const std::size_t df = n - 2;
  const double t = df <= 30 ? kT975[df - 1] : 1.96;
  return t / std::sqrt(static_cast<double>(df) + t * t);
}

}  // namespace cma
