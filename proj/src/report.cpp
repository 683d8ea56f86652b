#include "cma/report.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cma/error.hpp"

namespace cma {
namespace {

constexpr std::array<std::string_view, 29> kColumns = {
    "workload",           "mode",          "adversary",      "multiplier",
    "occupancy",          "seed",          "object_count",   "reps",
    "median_ns",          "min_ns",        "max_ns",         "mad_ns",
    "samples_ns",         "backing_allocs", "backing_frees", "backing_bytes",
    "precondition_allocs", "precondition_frees", "checksum", "objects",
    "unique_lines",       "lines_per_object", "mean_traversal_gap", "span",
    "line_size",          "object_size",   "chunk_size",     "backing",
    "error",
};

std::string fmt_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

template <typename T>
T parse_field(std::string_view text, std::string_view column) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    fail(ErrorCode::Parse, "report column " + std::string(column) + ": bad value '" +
                               std::string(text) + "'");
  return value;
}

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::vector<std::string> csv_split(std::string_view line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        fields.back() += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.emplace_back();
    } else {
      fields.back() += c;
    }
  }
  if (quoted) fail(ErrorCode::Parse, "report: unterminated quoted field");
  return fields;
}

std::string join_samples(const std::vector<std::uint64_t>& samples) {
  std::string out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (i) out += ';';
    out += std::to_string(samples[i]);
  }
  return out;
}

std::vector<std::string> row_of(const RunReport& r) {
  return {r.workload,
          to_string(r.mode),
          r.adversary,
          fmt_double(r.multiplier),
          fmt_double(r.occupancy),
          std::to_string(r.seed),
          std::to_string(r.object_count),
          std::to_string(r.reps),
          std::to_string(r.median_ns),
          std::to_string(r.min_ns),
          std::to_string(r.max_ns),
          std::to_string(r.mad_ns),
          join_samples(r.samples_ns),
          std::to_string(r.backing.allocations),
          std::to_string(r.backing.frees),
          std::to_string(r.backing.bytes),
          std::to_string(r.precondition_allocs),
          std::to_string(r.precondition_frees),
          std::to_string(r.checksum),
          std::to_string(r.locality.objects),
          std::to_string(r.locality.unique_lines),
          fmt_double(r.locality.lines_per_object),
          fmt_double(r.locality.mean_traversal_gap),
          std::to_string(r.locality.span),
          std::to_string(r.locality.line_size),
          std::to_string(r.locality.object_size),
          std::to_string(r.chunk_size),
          r.backing_name,
          r.error};
}

RunReport report_from_fields(const std::vector<std::string>& f) {
  auto u64 = [&](std::size_t i) { return parse_field<std::uint64_t>(f[i], kColumns[i]); };
  auto dbl = [&](std::size_t i) { return parse_field<double>(f[i], kColumns[i]); };
  RunReport r;
  r.workload = f[0];
  r.mode = parse_allocator_mode(f[1]);
  r.adversary = f[2];
  r.multiplier = dbl(3);
  r.occupancy = dbl(4);
  r.seed = u64(5);
  r.object_count = u64(6);
  r.reps = static_cast<std::uint32_t>(u64(7));
  r.median_ns = u64(8);
  r.min_ns = u64(9);
  r.max_ns = u64(10);
  r.mad_ns = u64(11);
  std::string_view samples = f[12];
  while (!samples.empty()) {
    auto semi = samples.find(';');
    r.samples_ns.push_back(parse_field<std::uint64_t>(samples.substr(0, semi), kColumns[12]));
    samples = semi == std::string_view::npos ? std::string_view{} : samples.substr(semi + 1);
  }
  r.backing.allocations = u64(13);
  r.backing.frees = u64(14);
  r.backing.bytes = u64(15);
  r.precondition_allocs = u64(16);
  r.precondition_frees = u64(17);
  r.checksum = u64(18);
  r.locality.objects = u64(19);
  r.locality.unique_lines = u64(20);
  r.locality.lines_per_object = dbl(21);
  r.locality.mean_traversal_gap = dbl(22);
  r.locality.span = u64(23);
  r.locality.line_size = u64(24);
  r.locality.object_size = u64(25);
  r.chunk_size = u64(26);
  r.backing_name = f[27];
  r.error = f[28];
  return r;
}

nlohmann::ordered_json json_of(const RunReport& r) {
  nlohmann::ordered_json j;
  j["workload"] = r.workload;
  j["mode"] = to_string(r.mode);
  j["adversary"] = r.adversary;
  j["multiplier"] = r.multiplier;
  j["occupancy"] = r.occupancy;
  j["seed"] = r.seed;
  j["object_count"] = r.object_count;
  j["reps"] = r.reps;
  j["median_ns"] = r.median_ns;
  j["min_ns"] = r.min_ns;
  j["max_ns"] = r.max_ns;
  j["mad_ns"] = r.mad_ns;
  j["samples_ns"] = r.samples_ns;
  j["backing_allocs"] = r.backing.allocations;
  j["backing_frees"] = r.backing.frees;
  j["backing_bytes"] = r.backing.bytes;
  j["precondition_allocs"] = r.precondition_allocs;
  j["precondition_frees"] = r.precondition_frees;
  j["checksum"] = r.checksum;
  j["objects"] = r.locality.objects;
  j["unique_lines"] = r.locality.unique_lines;
  j["lines_per_object"] = r.locality.lines_per_object;
  j["mean_traversal_gap"] = r.locality.mean_traversal_gap;
  j["span"] = r.locality.span;
  j["line_size"] = r.locality.line_size;
  j["object_size"] = r.locality.object_size;
  j["chunk_size"] = r.chunk_size;
  j["backing"] = r.backing_name;
  j["error"] = r.error;
  return j;
}

RunReport report_from_json(const nlohmann::json& j) {
  try {
    RunReport r;
    r.workload = j.at("workload").get<std::string>();
    r.mode = parse_allocator_mode(j.at("mode").get<std::string>());
    r.adversary = j.at("adversary").get<std::string>();
    r.multiplier = j.at("multiplier").get<double>();
    r.occupancy = j.at("occupancy").get<double>();
    r.seed = j.at("seed").get<std::uint64_t>();
    r.object_count = j.at("object_count").get<std::uint64_t>();
    r.reps = j.at("reps").get<std::uint32_t>();
    r.median_ns = j.at("median_ns").get<std::uint64_t>();
    r.min_ns = j.at("min_ns").get<std::uint64_t>();
    r.max_ns = j.at("max_ns").get<std::uint64_t>();
    r.mad_ns = j.at("mad_ns").get<std::uint64_t>();
    r.samples_ns = j.at("samples_ns").get<std::vector<std::uint64_t>>();
    r.backing.allocations = j.at("backing_allocs").get<std::uint64_t>();
    r.backing.frees = j.at("backing_frees").get<std::uint64_t>();
    r.backing.bytes = j.at("backing_bytes").get<std::uint64_t>();
    r.precondition_allocs = j.at("precondition_allocs").get<std::uint64_t>();
    r.precondition_frees = j.at("precondition_frees").get<std::uint64_t>();
    r.checksum = j.at("checksum").get<std::uint64_t>();
    r.locality.objects = j.at("objects").get<std::uint64_t>();
    r.locality.unique_lines = j.at("unique_lines").get<std::uint64_t>();
    r.locality.lines_per_object = j.at("lines_per_object").get<double>();
    r.locality.mean_traversal_gap = j.at("mean_traversal_gap").get<double>();
    r.locality.span = j.at("span").get<std::uint64_t>();
    r.locality.line_size = j.at("line_size").get<std::size_t>();
    r.locality.object_size = j.at("object_size").get<std::size_t>();
    r.chunk_size = j.at("chunk_size").get<std::size_t>();
    r.backing_name = j.at("backing").get<std::string>();
    r.error = j.at("error").get<std::string>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, std::string("report JSON: ") + e.what());
  }
}

}  // namespace

ReportFormat parse_report_format(const std::string& text) {
  if (text == "csv") return ReportFormat::Csv;
  if (text == "json") return ReportFormat::Json;
  fail(ErrorCode::InvalidArgument, "unknown report format '" + text + "'");
}

void RunReport::set_samples(std::vector<std::uint64_t> samples) {
  samples_ns = std::move(samples);
  reps = static_cast<std::uint32_t>(samples_ns.size());
  if (samples_ns.empty()) {
    median_ns = min_ns = max_ns = mad_ns = 0;
    return;
  }
  auto median_of = [](std::vector<std::uint64_t> v) {
    std::sort(v.begin(), v.end());
    const std::size_t mid = v.size() / 2;
    return v.size() % 2 ? v[mid] : v[mid - 1] + (v[mid] - v[mid - 1]) / 2;
  };
  median_ns = median_of(samples_ns);
  auto [lo, hi] = std::minmax_element(samples_ns.begin(), samples_ns.end());
  min_ns = *lo;
  max_ns = *hi;
  std::vector<std::uint64_t> dev;
  for (auto s : samples_ns) dev.push_back(s > median_ns ? s - median_ns : median_ns - s);
  mad_ns = median_of(std::move(dev));
}

std::span<const std::string_view> report_columns() { return kColumns; }

std::string format_reports(std::span<const RunReport> reports, ReportFormat format) {
  if (format == ReportFormat::Json) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& r : reports) arr.push_back(json_of(r));
    return arr.dump(2) + "\n";
  }
  std::string out;
  for (std::size_t i = 0; i < kColumns.size(); ++i) {
    if (i) out += ',';
    out += kColumns[i];
  }
  out += '\n';
  for (const auto& r : reports) {
    auto fields = row_of(r);
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (i) out += ',';
      out += csv_escape(fields[i]);
    }
    out += '\n';
  }
  return out;
}

std::vector<RunReport> parse_reports(std::string_view text) {
  std::size_t first = text.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) fail(ErrorCode::Parse, "report is empty");
  std::vector<RunReport> out;
  if (text[first] == '[' || text[first] == '{') {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::Parse, std::string("report JSON: ") + e.what());
    }
    if (j.is_object()) {
      out.push_back(report_from_json(j));
    } else {
      for (const auto& item : j) out.push_back(report_from_json(item));
    }
    return out;
  }

  std::size_t line_no = 0;
  bool header = true;
  while (!text.empty()) {
    auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty()) continue;
    auto fields = csv_split(line);
    if (header) {
      if (fields.size() != kColumns.size() || !std::equal(fields.begin(), fields.end(), kColumns.begin()))
        fail(ErrorCode::Parse, "report CSV: unexpected header");
      header = false;
      continue;
    }
    if (fields.size() != kColumns.size())
      fail(ErrorCode::Parse, "report CSV line " + std::to_string(line_no) + ": expected " +
                                 std::to_string(kColumns.size()) + " fields, got " +
                                 std::to_string(fields.size()));
    out.push_back(report_from_fields(fields));
  }
  if (header) fail(ErrorCode::Parse, "report CSV: missing header");
  return out;
}

void write_reports(std::span<const RunReport> reports, ReportFormat format,
                   const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write report '" + path.string() + "'");
  out << format_reports(reports, format);
  if (!out) fail(ErrorCode::Io, "failed writing report '" + path.string() + "'");
}

std::vector<RunReport> read_reports(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open report '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_reports(buf.str());
}

std::vector<ComparisonRow> compare_reports(std::span<const RunReport> reports,
                                           std::size_t baseline) {
  if (reports.size() < 2) fail(ErrorCode::Comparison, "comparison needs at least two reports");
  if (baseline >= reports.size()) fail(ErrorCode::Comparison, "baseline index out of range");
  const RunReport& base = reports[baseline];
  if (base.median_ns == 0) fail(ErrorCode::Comparison, "baseline report has no timing");
  std::vector<ComparisonRow> rows;
  for (const auto& r : reports) {
    if (r.workload != base.workload)
      fail(ErrorCode::Comparison, "cannot compare workload '" + r.workload + "' against '" +
                                      base.workload + "'");
    rows.push_back({r.workload, r.mode, r.adversary, r.median_ns,
                    static_cast<double>(r.median_ns) / static_cast<double>(base.median_ns)});
  }
  return rows;
}

std::string format_comparison(std::span<const ComparisonRow> rows) {
  std::string out = "workload,mode,adversary,median_ns,ratio\n";
  for (const auto& r : rows)
    out += r.workload + ',' + to_string(r.mode) + ',' + csv_escape(r.adversary) + ',' +
           std::to_string(r.median_ns) + ',' + fmt_double(r.ratio) + '\n';
  return out;
}

}  // namespace cma
