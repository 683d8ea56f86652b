#include "cma/bench.hpp"

#include <chrono>
#include <cstring>
#include <string>

#include <json.hpp>

#include "cma/error.hpp"

#if defined(__unix__) || defined(__APPLE__)
#include <sys/wait.h>
#include <unistd.h>
#define CMA_HAVE_FORK 1
#endif

namespace cma {
namespace {

std::vector<LiveLedger>& retained_ledgers() {
  static auto* ledgers = new std::vector<LiveLedger>();  // never destroyed
  return *ledgers;
}

}  // namespace

AllocationProfile profile_workload(const WorkloadSpec& spec, std::size_t cutoff) {
  AllocationProfile profile(cutoff);
  ProfilingBacking recorder(profile);
  run_workload(spec, AllocatorMode::Naive, recorder);
  return profile;
}

RunReport run_configuration(const RunRequest& request, BackingAllocator& backing) {
  if (request.reps == 0) fail(ErrorCode::InvalidArgument, "repetitions must be at least 1");
  if (!is_workload_name(request.workload.name))
    fail(ErrorCode::InvalidArgument, "unknown workload '" + request.workload.name + "'");
  request.adversary.validate();

  RunReport report;
  report.workload = request.workload.name;
  report.mode = request.mode;
  report.adversary = request.adversary.name;
  report.multiplier = request.adversary.multiplier;
  report.occupancy = request.adversary.occupancy;
  report.seed = request.adversary.seed;
  report.object_count = request.workload.object_count;
  report.chunk_size = request.allocator.chunk_size;
  report.backing_name = backing.name();
  report.locality.line_size = request.line_size;

  if (!request.adversary.is_noop()) {
    if (!request.profile)
      fail(ErrorCode::ProfileMissing,
           "adversarial allocation needs an allocation profile; create one with the `profile` command");
    CountingBacking counter(backing);
    LiveLedger ledger = precondition(request.adversary, *request.profile, counter);
    report.precondition_allocs = counter.counts().allocations;
    report.precondition_frees = counter.counts().frees;
    retained_ledgers().push_back(std::move(ledger));
  }

  std::vector<std::uint64_t> samples;
  samples.reserve(request.reps);
  for (std::uint32_t rep = 0; rep < request.reps; ++rep) {
    CountingBacking counter(backing);
    const auto start = std::chrono::steady_clock::now();
    WorkloadResult result = run_workload(request.workload, request.mode, counter, request.allocator);
    const auto stop = std::chrono::steady_clock::now();
    samples.push_back(static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::nanoseconds>(stop - start).count()));

    if (rep == 0) {
      report.checksum = result.checksum;
      report.backing = counter.counts();
      if (!result.trace.empty())
        report.locality = analyze_trace(result.trace, result.trace_object_size, request.line_size);
    } else if (result.checksum != report.checksum || !(counter.counts() == report.backing)) {
      fail(ErrorCode::Workload, request.workload.name +
                                    ": repetitions disagree on checksum or backing operations");
    }
  }
  report.set_samples(std::move(samples));
  return report;
}

#ifdef CMA_HAVE_FORK

namespace {

void write_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    ssize_t n = ::write(fd, data.data() + off, data.size() - off);
    if (n <= 0) return;
    off += static_cast<std::size_t>(n);
  }
}

}  // namespace

RunReport run_isolated(const RunRequest& request) {
  int fds[2];
  if (::pipe(fds) != 0) fail(ErrorCode::Io, "pipe failed: " + std::string(std::strerror(errno)));
  const pid_t pid = ::fork();
  if (pid < 0) {
    ::close(fds[0]);
    ::close(fds[1]);
    fail(ErrorCode::Io, "fork failed: " + std::string(std::strerror(errno)));
  }
  if (pid == 0) {
    ::close(fds[0]);
    int status = 0;
    std::string payload;
    try {
      RunReport report = run_configuration(request);
      payload = format_reports(std::span<const RunReport>(&report, 1), ReportFormat::Json);
    } catch (const Error& e) {
      payload = nlohmann::json{{"error_code", static_cast<int>(e.code())}, {"message", e.what()}}.dump();
      status = 1;
    } catch (const std::exception& e) {
      payload = nlohmann::json{{"error_code", static_cast<int>(ErrorCode::Workload)},
                               {"message", e.what()}}.dump();
      status = 1;
    }
    write_all(fds[1], payload);
    ::close(fds[1]);
    ::_exit(status);
  }

  ::close(fds[1]);
  std::string payload;
  char buf[4096];
  for (;;) {
    ssize_t n = ::read(fds[0], buf, sizeof buf);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) break;
    payload.append(buf, static_cast<std::size_t>(n));
  }
  ::close(fds[0]);
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }

  if (WIFSIGNALED(status))
    fail(ErrorCode::Workload, "measurement process killed by signal " + std::to_string(WTERMSIG(status)));
  if (WIFEXITED(status) && WEXITSTATUS(status) == 1) {
    auto j = nlohmann::json::parse(payload, nullptr, false);
    if (j.is_object() && j.contains("error_code"))
      fail(static_cast<ErrorCode>(j["error_code"].get<int>()), j["message"].get<std::string>());
    fail(ErrorCode::Workload, "measurement process failed");
  }
  auto reports = parse_reports(payload);
  if (reports.size() != 1) fail(ErrorCode::Workload, "measurement process returned no report");
  return reports.front();
}

#else

RunReport run_isolated(const RunRequest& request) { return run_configuration(request); }

#endif

std::vector<RunReport> sweep_occupancy(const RunRequest& base, double multiplier,
                                       std::span<const double> occupancies,
                                       std::span<const std::uint64_t> seeds) {
  if (occupancies.empty()) fail(ErrorCode::InvalidArgument, "occupancy sweep needs at least one value");
  if (seeds.empty()) fail(ErrorCode::InvalidArgument, "occupancy sweep needs at least one seed");
  for (double occ : occupancies)
    if (!(occ >= 0.0 && occ < 1.0))
      fail(ErrorCode::InvalidArgument, "sweep occupancy " + std::to_string(occ) + " outside [0, 1)");
  if (multiplier > 0.0 && !base.profile)
    fail(ErrorCode::ProfileMissing,
         "adversarial allocation needs an allocation profile; create one with the `profile` command");

  std::vector<RunReport> rows;
  for (double occ : occupancies) {
    for (std::uint64_t seed : seeds) {
      RunRequest request = base;
      request.adversary = AdversarialConfig{"sweep", multiplier, occ, seed};
      request.workload.seed = seed;
      try {
        rows.push_back(run_isolated(request));
      } catch (const Error& e) {
        RunReport failed;
        failed.workload = request.workload.name;
        failed.mode = request.mode;
        failed.adversary = request.adversary.name;
        failed.multiplier = multiplier;
        failed.occupancy = occ;
        failed.seed = seed;
        failed.object_count = request.workload.object_count;
        failed.chunk_size = request.allocator.chunk_size;
        failed.backing_name = system_backing().name();
        failed.locality.line_size = request.line_size;
        failed.error = std::string(to_string(e.code())) + ": " + e.what();
        rows.push_back(std::move(failed));
      }
    }
  }
  return rows;
}

}  // namespace cma
