#include "cma/profile.hpp"

#include <bit>
#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "cma/error.hpp"

namespace cma {

AllocationProfile::AllocationProfile(std::size_t cutoff) : cutoff_(cutoff) {
  if (cutoff_ == 0) fail(ErrorCode::InvalidArgument, "profile cutoff must be positive");
}

void AllocationProfile::record_allocation(std::size_t size) {
  if (size == 0) fail(ErrorCode::InvalidArgument, "recorded allocation of zero bytes");
  ++observed_;
  if (size < cutoff_) {
    ++counts_[size];
    ++total_recorded_;
  }
  ++live_;
  if (live_ > peak_live_) peak_live_ = live_;
}

void AllocationProfile::record_free() {
  if (live_ == 0)
    fail(ErrorCode::Accounting, "free recorded with no live allocations (mismatched instrumentation)");
  --live_;
}

AllocationProfile AllocationProfile::from_counts(std::map<std::size_t, std::uint64_t> counts,
                                                 std::uint64_t peak_live, std::size_t cutoff,
                                                 std::uint64_t observed) {
  AllocationProfile p(cutoff);
  for (auto it = counts.begin(); it != counts.end();) {
    if (it->first == 0) fail(ErrorCode::Validation, "profile entry with size 0");
    if (it->first >= cutoff)
      fail(ErrorCode::Validation, "profile entry for size " + std::to_string(it->first) +
                                      " is not below the cutoff " + std::to_string(cutoff));
    if (it->second == 0) {
      it = counts.erase(it);
      continue;
    }
    p.total_recorded_ += it->second;
    ++it;
  }
  p.counts_ = std::move(counts);
  p.observed_ = observed == 0 ? p.total_recorded_ : observed;
  if (p.observed_ < p.total_recorded_)
    fail(ErrorCode::Validation, "profile observed count is below the recorded total");
  if (peak_live > p.observed_)
    fail(ErrorCode::Validation, "profile peak_live exceeds the allocations observed");
  p.peak_live_ = peak_live;
  return p;
}

std::map<std::size_t, std::uint64_t> AllocationProfile::binned() const {
  std::map<std::size_t, std::uint64_t> bins;
  for (auto [size, count] : counts_) bins[std::max<std::size_t>(8, std::bit_ceil(size))] += count;
  return bins;
}

std::string format_profile(const AllocationProfile& profile) {
  std::ostringstream out;
  out << "# cma allocation profile\n";
  out << "cutoff " << profile.cutoff() << "\n";
  out << "observed " << profile.observed() << "\n";
  out << "peak_live " << profile.peak_live() << "\n";
  for (auto [size, count] : profile.counts()) out << size << ' ' << count << "\n";
  return out.str();
}

namespace {

std::vector<std::string_view> split_words(std::string_view line) {
  std::vector<std::string_view> words;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) words.push_back(line.substr(i, j - i));
    i = j;
  }
  return words;
}

[[noreturn]] void parse_error(std::size_t line_no, const std::string& what) {
  fail(ErrorCode::Parse, "profile line " + std::to_string(line_no) + ": " + what);
}

std::uint64_t parse_count(std::string_view word, std::size_t line_no, const char* field) {
  if (!word.empty() && word.front() == '-')
    parse_error(line_no, std::string("negative ") + field + " '" + std::string(word) + "'");
  std::uint64_t value = 0;
  auto [ptr, ec] = std::from_chars(word.data(), word.data() + word.size(), value);
  if (ec != std::errc{} || ptr != word.data() + word.size())
    parse_error(line_no, std::string("bad ") + field + " '" + std::string(word) + "'");
  return value;
}

}  // namespace

AllocationProfile parse_profile(std::string_view text) {
  std::size_t cutoff = AllocationProfile::kDefaultCutoff;
  std::uint64_t observed = 0;
  bool have_peak = false;
  std::uint64_t peak = 0;
  std::map<std::size_t, std::uint64_t> counts;
  std::map<std::size_t, std::size_t> entry_line;

  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);

    auto words = split_words(line);
    if (words.empty() || words[0].front() == '#') continue;
    if (words.size() != 2) parse_error(line_no, "expected two fields, got " + std::to_string(words.size()));

    if (words[0] == "cutoff") {
      cutoff = parse_count(words[1], line_no, "cutoff");
      if (cutoff == 0) parse_error(line_no, "cutoff must be positive");
    } else if (words[0] == "observed") {
      observed = parse_count(words[1], line_no, "observed count");
    } else if (words[0] == "peak_live") {
      peak = parse_count(words[1], line_no, "peak_live");
      have_peak = true;
    } else {
      auto size = parse_count(words[0], line_no, "size");
      auto count = parse_count(words[1], line_no, "count");
      if (size == 0) parse_error(line_no, "size must be positive");
      if (!counts.emplace(size, count).second)
        parse_error(line_no, "duplicate entry for size " + std::to_string(size));
      entry_line[size] = line_no;
    }
  }
  if (!have_peak) parse_error(line_no, "missing peak_live header");
  for (auto [size, line] : entry_line)
    if (size >= cutoff)
      fail(ErrorCode::Validation, "profile line " + std::to_string(line) + ": size " +
                                      std::to_string(size) + " is not below the cutoff " +
                                      std::to_string(cutoff));
  try {
    return AllocationProfile::from_counts(std::move(counts), peak, cutoff, observed);
  } catch (const Error& e) {
    fail(e.code(), std::string("profile: ") + e.what());
  }
}

void save_profile(const AllocationProfile& profile, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write profile '" + path.string() + "'");
  out << format_profile(profile);
  if (!out) fail(ErrorCode::Io, "failed writing profile '" + path.string() + "'");
}

AllocationProfile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::ProfileMissing, "cannot open profile '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_profile(buf.str());
}

void* ProfilingBacking::allocate(std::size_t size, std::size_t alignment) {
  void* p = inner_->allocate(size, alignment);
  if (p != nullptr) profile_->record_allocation(size);
  return p;
}

void ProfilingBacking::deallocate(void* p) noexcept {
  if (p == nullptr) return;
  inner_->deallocate(p);
  if (profile_->live() > 0) profile_->record_free();
}

}  // namespace cma
