// Acceptance checks. Prints one PASS/FAIL line per criterion; `--only A3`
// (repeatable) restricts the run. Exit status is nonzero if any check fails.
#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "cma/adversary.hpp"
#include "cma/bench.hpp"
#include "cma/locality.hpp"
#include "cma/workloads.hpp"
#include "equivalence.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace cma;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream out;
  out.precision(digits);
  out << v;
  return out.str();
}

// Runs cma-bench and returns its stdout; throws on a nonzero exit.
std::string bench(const std::string& args) {
  const std::string cmd = std::string(CMA_BENCH_PATH) + " " + args;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (p == nullptr) throw std::runtime_error("cannot start cma-bench");
  std::string out;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) out.append(buf, n);
  const int status = ::pclose(p);
  if (!WIFEXITED(status) || WEXITSTATUS(status) != 0)
    throw std::runtime_error("cma-bench " + args + " exited with status " + std::to_string(status));
  return out;
}

nlohmann::json bench_json(const std::string& args) {
  auto j = nlohmann::json::parse(bench(args + " --format json"));
  return j.is_array() ? j : nlohmann::json::array({j});
}

struct Scratch {
  fs::path dir;
  Scratch() {
    dir = fs::temp_directory_path() / ("cma_acceptance_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }
};

const Scratch& scratch() {
  static Scratch s;
  return s;
}

std::string list_profile() {
  static std::string path;
  if (path.empty()) {
    path = (scratch().dir / "list-churn.profile").string();
    bench("profile --workload list-churn --out " + path + " 2>/dev/null");
  }
  return path;
}

// ---------------------------------------------------------------------------

Outcome a1() {
  const auto t0 = Clock::now();
  const std::string common = "run --workload list-churn --mode custom --seed 7 --reps 1 --profile " + list_profile();
  auto base = bench_json(common + " --adv adv0").at(0);
  auto frag = bench_json(common + " --adv adv10").at(0);
  const double secs = seconds_since(t0);
  const bool same = base["unique_lines"] == frag["unique_lines"] &&
                    base["mean_traversal_gap"] == frag["mean_traversal_gap"];
  return {same && secs < 30.0,
          "unique_lines " + base["unique_lines"].dump() + " vs " + frag["unique_lines"].dump() +
              ", mean_traversal_gap " + base["mean_traversal_gap"].dump() + " vs " +
              frag["mean_traversal_gap"].dump() + ", " + fmt(secs, 3) + " s"};
}

Outcome a2() {
  const std::string common = "run --workload list-churn --mode naive --reps 7 --profile " + list_profile();
  bool ok = true;
  std::string detail;
  for (int run = 1; run <= 2; ++run) {
    const std::string seed = " --seed " + std::to_string(run);
    auto base = bench_json(common + seed + " --adv adv0").at(0);
    auto frag = bench_json(common + seed + " --adv adv10").at(0);
    const double lines = frag["lines_per_object"].get<double>() / base["lines_per_object"].get<double>();
    const double time = frag["median_ns"].get<double>() / base["median_ns"].get<double>();
    ok = ok && lines >= 1.3 && time >= 1.05;
    detail += (run > 1 ? "; " : "") + std::string("run ") + std::to_string(run) +
              ": lines_per_object x" + fmt(lines) + ", median time x" + fmt(time);
  }
  return {ok, detail};
}

Outcome a3() {
  auto spec = default_workload("region-phases");
  spec.object_count = 100000;
  spec.phases = 1;
  const auto sizes = region_phase_sizes(spec, 0);
  std::uint64_t aligned = 0;
  for (auto s : sizes) aligned += oracle::round_up(s, 16);
  const auto replay = oracle::replay_region(sizes, 65536);
  const std::uint64_t bound = (aligned + 65535) / 65536 + 1;

  CountingBacking custom, naive;
  run_region_phases(spec, AllocatorMode::Custom, custom);
  run_region_phases(spec, AllocatorMode::Naive, naive);
  const auto c = custom.counts().allocations;
  const auto n = naive.counts().allocations;
  const double reduction = static_cast<double>(n) / static_cast<double>(c);
  const bool ok = c <= bound && c == replay.chunks && n == 100000 && reduction >= 1000.0;
  return {ok, "custom " + std::to_string(c) + " (oracle " + std::to_string(replay.chunks) + ", bound " +
                  std::to_string(bound) + " for B' = " + std::to_string(aligned) + "), naive " +
                  std::to_string(n) + ", reduction x" + fmt(reduction)};
}

Outcome a4() {
  bool ok = true;
  std::string detail;
  const auto profile = AllocationProfile::from_counts({{16, 40}, {32, 30}, {48, 20}, {200, 10}}, 100, 4096, 100);
  constexpr int kSeeds = 200;
  for (const auto& name : adversarial_preset_names()) {
    const auto preset = adversarial_preset(name);
    const std::uint64_t n = round_count(static_cast<long double>(preset.multiplier) * profile.peak_live());
    const std::uint64_t m = round_count(static_cast<long double>(n) * (1.0L - preset.occupancy));

    std::vector<std::uint32_t> survived(n, 0);
    bool exact = true;
    for (int seed = 1; seed <= kSeeds; ++seed) {
      oracle::RecordingBacking rec;
      CountingBacking counter(rec);
      auto cfg = preset;
      cfg.seed = static_cast<std::uint64_t>(seed);
      auto ledger = precondition(cfg, profile, counter);
      exact = exact && counter.counts().allocations == n && counter.counts().frees == m &&
              ledger.live().size() == n - m;
      std::unordered_map<void*, std::size_t> index;
      for (std::size_t i = 0; i < rec.blocks.size(); ++i) index[rec.blocks[i].base] = i;
      for (void* p : ledger.live()) ++survived[index.at(p)];
      ledger.release(rec);
    }
    ok = ok && exact;
    std::string line = name + ": n " + std::to_string(n) + " m " + std::to_string(m) + (exact ? " exact" : " MISMATCH");
    if (n > 0) {
      const double occ = preset.occupancy;
      const double p_out = oracle::binomial_outside(kSeeds, occ, 0.05);
      const double expect = p_out * static_cast<double>(n);
      const double limit = expect + 3.0 * std::sqrt(expect * (1.0 - p_out));
      std::size_t outside = 0;
      for (auto s : survived) outside += std::fabs(s / double(kSeeds) - occ) > 0.05;
      double worst_decile = 0.0;
      for (int d = 0; d < 10; ++d) {
        const std::size_t lo = n * d / 10, hi = n * (d + 1) / 10;
        double sum = 0;
        for (std::size_t i = lo; i < hi; ++i) sum += survived[i];
        worst_decile = std::max(worst_decile, std::fabs(sum / (double(hi - lo) * kSeeds) - occ));
      }
      const bool uniform = outside <= limit && worst_decile <= 0.05;
      ok = ok && uniform;
      line += ", indices outside +/-0.05: " + std::to_string(outside) + " (limit " + fmt(limit, 3) +
              "), worst decile deviation " + fmt(worst_decile, 3);
    }
    detail += (detail.empty() ? "" : "; ") + line;
  }
  return {ok, detail};
}

Outcome a5() {
  const std::map<std::size_t, std::uint64_t> counts{{16, 50}, {24, 25}, {64, 15}, {512, 10}};
  const auto profile = AllocationProfile::from_counts(counts, 10);
  SizeSampler sampler(profile);
  Rng rng(mix_seed(2024, 5));
  std::map<std::size_t, std::uint64_t> seen;
  constexpr int kDraws = 100000;
  for (int i = 0; i < kDraws; ++i) ++seen[sampler(rng)];
  double worst = 0.0;
  bool ok = seen.size() == counts.size();
  for (auto [size, count] : counts) {
    const double dev = std::fabs(seen[size] / double(kDraws) - count / 100.0);
    worst = std::max(worst, dev);
  }
  ok = ok && worst <= 0.02;
  return {ok, "worst class deviation " + fmt(worst, 3)};
}

Outcome a6() {
  const auto t0 = Clock::now();
  oracle::SequenceStats stack_stats, pool_stats;
  std::string failure;
  for (std::uint64_t seed = 1; seed <= 1000 && failure.empty(); ++seed) {
    failure = oracle::stack_sequence(seed, 10000, &stack_stats);
    if (failure.empty()) failure = oracle::pool_sequence(seed, 10000, &pool_stats);
  }
  const double secs = seconds_since(t0);
  if (!failure.empty()) return {false, failure};
  return {secs < 60.0, "1000 + 1000 sequences of 10^4 ops; stack rollbacks " +
                           std::to_string(stack_stats.rollbacks) + ", exhaustions " +
                           std::to_string(stack_stats.exhaustions) + "; pool walks " +
                           std::to_string(pool_stats.iterations) + " visiting " +
                           std::to_string(pool_stats.visits) + "; " + fmt(secs, 3) + " s"};
}

Outcome a7() {
  RunRequest req;
  req.workload = default_workload("class-churn");
  req.reps = 7;
  req.mode = AllocatorMode::Custom;
  auto custom = run_isolated(req);
  req.mode = AllocatorMode::Naive;
  auto naive = run_isolated(req);
  const double ratio = static_cast<double>(custom.median_ns) / static_cast<double>(naive.median_ns);
  return {custom.median_ns <= naive.median_ns,
          "custom " + std::to_string(custom.median_ns) + " ns, naive " + std::to_string(naive.median_ns) +
              " ns, custom/naive " + fmt(ratio)};
}

Outcome a8() {
  std::size_t checked = 0;
  for (const char* name : {"list-churn", "stack-parse", "pool-churn", "region-phases", "class-churn"}) {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      auto spec = default_workload(name);
      spec.seed = seed;
      CountingBacking a, b;
      const auto custom = run_workload(spec, AllocatorMode::Custom, a).checksum;
      const auto naive = run_workload(spec, AllocatorMode::Naive, b).checksum;
      if (custom != naive)
        return {false, std::string(name) + " seed " + std::to_string(seed) + ": checksums differ"};
      ++checked;
    }
  }
  return {true, std::to_string(checked) + " workload/seed pairs agree"};
}

Outcome a9() {
  const std::string occ = "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9";
  const std::string common = "sweep --workload list-churn --multiplier 10 --reps 1 --occupancies " + occ +
                             " --profile " + list_profile();
  auto naive = bench_json(common + " --mode naive --seeds 1,2,3");
  auto region = bench_json(common + " --mode custom --seeds 1");

  auto series = [](const nlohmann::json& rows, std::vector<double>& x, std::vector<double>& y) {
    std::map<double, std::pair<double, int>> by_occ;
    for (const auto& r : rows) {
      if (!r["error"].get<std::string>().empty()) throw std::runtime_error(r["error"].get<std::string>());
      auto& [sum, count] = by_occ[r["occupancy"].get<double>()];
      sum += r["lines_per_object"].get<double>();
      ++count;
    }
    for (auto [o, sc] : by_occ) {
      x.push_back(o);
      y.push_back(sc.first / sc.second);
    }
  };
  std::vector<double> nx, ny, rx, ry;
  series(naive, nx, ny);
  series(region, rx, ry);

  bool monotone = true;
  for (std::size_t i = 1; i < ny.size(); ++i) monotone = monotone && ny[i] >= ny[i - 1];
  const double rho_naive = spearman(nx, ny);
  const double rho_region = spearman(rx, ry);
  const double crit = spearman_critical_value(rx.size());
  const bool ok = monotone && rho_naive > 0.9 && std::fabs(rho_region) < crit;

  std::string curve;
  for (double v : ny) curve += (curve.empty() ? "" : " ") + fmt(v, 4);
  return {ok, std::string("naive lines_per_object [") + curve + "], " +
                  (monotone ? "non-decreasing" : "not non-decreasing") + ", spearman " + fmt(rho_naive, 3) +
                  "; region spearman " + fmt(rho_region, 3) + " (|rho| < " + fmt(crit, 3) + " required)"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> checks{
      {"A1", a1}, {"A2", a2}, {"A3", a3}, {"A4", a4}, {"A5", a5},
      {"A6", a6}, {"A7", a7}, {"A8", a8}, {"A9", a9},
  };
  std::set<std::string> only;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--only" && i + 1 < argc) {
      only.insert(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--only A1]...\n", argv[0]);
      return 2;
    }
  }

  int failures = 0;
  for (const auto& [id, check] : checks) {
    if (!only.empty() && only.count(id) == 0) continue;
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("%s %s %s\n", id.c_str(), o.pass ? "PASS" : "FAIL", o.detail.c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
