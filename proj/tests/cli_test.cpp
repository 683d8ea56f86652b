// Drives the cma-bench executable and checks exit codes and output.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <json.hpp>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <string>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result bench(const std::string& args) {
  const std::string cmd = std::string(CMA_BENCH_PATH) + " " + args + " 2>/dev/null";
  Result r;
  FILE* p = ::popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

nlohmann::json rows(const std::string& text) {
  auto j = nlohmann::json::parse(text);
  return j.is_array() ? j : nlohmann::json::array({j});
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("cma_cli_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const char* name) const { return (path / name).string(); }
};

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(bench("").code == 2);
  CHECK(bench("frobnicate").code == 2);
  CHECK(bench("run --workload no-such-workload").code == 2);
  CHECK(bench("run").code == 2);
  CHECK(bench("run --workload list-churn --reps 0").code == 2);
  CHECK(bench("run --workload list-churn --adv adv1 --multiplier 2").code == 2);
  CHECK(bench("run --workload list-churn --adv adv7").code == 2);
  CHECK(bench("sweep --workload list-churn --occupancies ''").code == 2);
  CHECK(bench("profile --workload list-churn").code == 2);
  CHECK(bench("--help").code == 0);
}

TEST_CASE("adversarial runs need a profile") {
  CHECK(bench("run --workload list-churn --objects 1000 --adv adv10").code == 3);
  CHECK(bench("run --workload list-churn --objects 1000 --adv adv1 --profile /nonexistent/p.profile").code == 3);
  CHECK(bench("sweep --workload list-churn --objects 1000 --occupancies 0.5").code == 3);
}

TEST_CASE("profile, run, sweep and compare") {
  TempDir dir;
  const auto prof = dir / "list.profile";
  REQUIRE(bench("profile --workload list-churn --objects 3000 --out " + prof).code == 0);
  REQUIRE(fs::exists(prof));

  const std::string common = "--workload list-churn --objects 3000 --seed 3 --reps 1 --profile " + prof;
  auto run = bench("run " + common + " --multiplier 2 --occupancy 0.5 --format json");
  REQUIRE(run.code == 0);
  auto r = rows(run.out).at(0);
  CHECK(r["workload"] == "list-churn");
  CHECK(r["precondition_allocs"] == 6000);
  CHECK(r["precondition_frees"] == 3000);
  CHECK(r["lines_per_object"] == 0.5);

  auto sweep = bench("sweep " + common + " --multiplier 2 --occupancies 0.5 --format json");
  REQUIRE(sweep.code == 0);
  auto s = rows(sweep.out);
  REQUIRE(s.size() == 1);
  for (const char* key : {"unique_lines", "lines_per_object", "mean_traversal_gap", "span", "backing_allocs",
                          "backing_frees", "backing_bytes", "checksum", "precondition_allocs"}) {
    CAPTURE(key);
    CHECK(s[0][key] == r[key]);
  }

  auto csv = bench("run " + common + " --adv adv1 --mode naive");
  REQUIRE(csv.code == 0);
  CHECK(csv.out.rfind("workload,mode,adversary,", 0) == 0);

  const auto a = dir / "a.csv";
  const auto b = dir / "b.json";
  REQUIRE(bench("run --workload list-churn --objects 3000 --reps 3 --out " + a).code == 0);
  REQUIRE(bench("run --workload list-churn --objects 3000 --reps 3 --mode naive --format json --out " + b).code == 0);
  auto cmp = bench("compare " + a + " " + b);
  REQUIRE(cmp.code == 0);
  CHECK(cmp.out.rfind("workload,mode,adversary,median_ns,ratio", 0) == 0);
  CHECK(cmp.out.find("\nlist-churn,custom,adv0,") != std::string::npos);
  CHECK(cmp.out.find("\nlist-churn,naive,adv0,") != std::string::npos);
  CHECK(bench("compare " + a).code == 2);
  CHECK(bench("compare " + a + " " + a + " --baseline 9").code == 2);
}

TEST_CASE("workload configuration files") {
  TempDir dir;
  const auto conf = dir / "w.conf";
  FILE* f = std::fopen(conf.c_str(), "w");
  std::fputs("workload region-phases\nobject_count 2000\nphases 2\n", f);
  std::fclose(f);
  auto run = bench("run --config " + conf + " --reps 1 --format json");
  REQUIRE(run.code == 0);
  CHECK(rows(run.out).at(0)["object_count"] == 2000);

  const auto bad = dir / "bad.conf";
  f = std::fopen(bad.c_str(), "w");
  std::fputs("workload region-phases\nobject_count lots\n", f);
  std::fclose(f);
  CHECK(bench("run --config " + bad).code == 2);
}
