#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cma/backing.hpp"
#include "cma/locality.hpp"
#include "cma/region.hpp"

namespace cma {

enum class ReportFormat { Csv, Json };

ReportFormat parse_report_format(const std::string& text);

// Outcome of measuring one configuration.
struct RunReport {
  std::string workload;
  AllocatorMode mode = AllocatorMode::Custom;
  std::string adversary = "adv0";
  double multiplier = 0.0;
  double occupancy = 0.0;
  std::uint64_t seed = 0;
  std::uint64_t object_count = 0;
  std::uint32_t reps = 0;

  std::vector<std::uint64_t> samples_ns;
  std::uint64_t median_ns = 0;
  std::uint64_t min_ns = 0;
  std::uint64_t max_ns = 0;
  std::uint64_t mad_ns = 0;  // median absolute deviation

  // Per repetition; identical across repetitions.
  BackingCounts backing;
  std::uint64_t precondition_allocs = 0;
  std::uint64_t precondition_frees = 0;
  std::uint64_t checksum = 0;

  LocalityReport locality;  // objects == 0 when the workload has no trace

  std::size_t chunk_size = 0;
  std::string backing_name;
  std::string error;  // set on failed sweep cells

  void set_samples(std::vector<std::uint64_t> samples);

  friend bool operator==(const RunReport&, const RunReport&) = default;
};

// Column order of the CSV form; the JSON form uses the same keys in the same
// order.
std::span<const std::string_view> report_columns();

std::string format_reports(std::span<const RunReport> reports, ReportFormat format);
std::vector<RunReport> parse_reports(std::string_view text);  // detects the format

void write_reports(std::span<const RunReport> reports, ReportFormat format,
                   const std::filesystem::path& path);
std::vector<RunReport> read_reports(const std::filesystem::path& path);

struct ComparisonRow {
  std::string workload;
  AllocatorMode mode;
  std::string adversary;
  std::uint64_t median_ns;
  double ratio;  // median_ns / baseline median_ns
};

// Normalizes every report's median to the baseline's. Throws Comparison with
// fewer than two reports or when the workloads differ.
std::vector<ComparisonRow> compare_reports(std::span<const RunReport> reports,
                                           std::size_t baseline = 0);
std::string format_comparison(std::span<const ComparisonRow> rows);

}  // namespace cma
