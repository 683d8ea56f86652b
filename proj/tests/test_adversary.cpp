#include <doctest.h>

#include <cmath>
#include <set>
#include <vector>

#include "cma/adversary.hpp"
#include "cma/error.hpp"
#include "oracles.hpp"

using namespace cma;

TEST_SUITE("adversary") {

TEST_CASE("preconditioning counts") {
  AdversarialConfig c{"x", 10.0, 0.8, 1};
  CHECK(preconditioning_allocations(c, 491000) == 4910000);
  CHECK(preconditioning_frees(100, 0.8) == 20);
  CHECK(preconditioning_frees(4910000, 0.8) == 982000);
  CHECK(preconditioning_frees(10, 0.0) == 10);
}

TEST_CASE("half counts round up") {
  CHECK(round_count(25.0L * (1.0L - 0.66L)) == 9);
  CHECK(round_count(8.5L) == 9);
  CHECK(round_count(8.4999L) == 8);
  CHECK(preconditioning_frees(25, 0.66) == 9);
}

TEST_CASE("presets") {
  auto a0 = adversarial_preset("adv0");
  CHECK(a0.is_noop());
  CHECK(preconditioning_allocations(a0, 1000) == 0);
  auto a1 = adversarial_preset("adv1");
  CHECK(a1.multiplier == 1.0);
  CHECK(a1.occupancy == 0.33);
  auto a3 = adversarial_preset("adv3");
  CHECK(a3.multiplier == 3.0);
  CHECK(a3.occupancy == 0.66);
  auto a10 = adversarial_preset("adv10", 5);
  CHECK(a10.multiplier == 10.0);
  CHECK(a10.occupancy == 0.8);
  CHECK(a10.seed == 5);
  CHECK_THROWS_AS(adversarial_preset("adv2"), Error);
  CHECK(adversarial_preset_names().size() == 4);
}

TEST_CASE("configuration validation") {
  CHECK_THROWS_AS((AdversarialConfig{"x", -1.0, 0.5, 0}.validate()), Error);
  CHECK_THROWS_AS((AdversarialConfig{"x", 1.0, 1.0, 0}.validate()), Error);
  CHECK_THROWS_AS((AdversarialConfig{"x", NAN, 0.5, 0}.validate()), Error);
  CHECK_NOTHROW((AdversarialConfig{"x", 2.5, 0.0, 0}.validate()));
}

TEST_CASE("sampler with a single size") {
  auto p = AllocationProfile::from_counts({{8, 1}}, 1);
  Rng rng(1);
  for (int i = 0; i < 1000; ++i) CHECK(sample_random_size(p, rng) == 8);
}

TEST_CASE("sampler follows the recorded frequencies") {
  auto p = AllocationProfile::from_counts({{16, 75}, {32, 25}}, 10);
  SizeSampler sampler(p);
  Rng rng(3);
  int small = 0;
  constexpr int kDraws = 100000;
  for (int i = 0; i < kDraws; ++i) {
    auto s = sampler(rng);
    REQUIRE((s == 16 || s == 32));
    small += s == 16;
  }
  CHECK(std::abs(static_cast<double>(small) / kDraws - 0.75) <= 0.02);
}

TEST_CASE("empty profile cannot be sampled") {
  AllocationProfile empty;
  try {
    SizeSampler s(empty);
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Sampling);
  }
}

TEST_CASE("preconditioning performs exactly n allocations and m frees") {
  auto p = AllocationProfile::from_counts({{16, 3}, {48, 1}, {200, 1}}, 1000, 4096, 5000);
  LedgerBacking ledger;
  CountingBacking counter(ledger);
  auto live = precondition(AdversarialConfig{"x", 3.0, 0.66, 4}, p, counter);
  CHECK(counter.counts().allocations == 3000);
  CHECK(counter.counts().frees == preconditioning_frees(3000, 0.66));
  CHECK(live.live().size() == 3000 - preconditioning_frees(3000, 0.66));
  CHECK(ledger.outstanding() == live.live().size());
  live.release(counter);
  CHECK(ledger.outstanding() == 0);
}

TEST_CASE("no-op configuration touches nothing") {
  CountingBacking counter;
  auto live = precondition(adversarial_preset("adv0"), AllocationProfile{}, counter);
  CHECK(counter.counts().allocations == 0);
  CHECK(live.live().empty());
}

TEST_CASE("survivors depend only on the seed") {
  auto p = AllocationProfile::from_counts({{32, 1}}, 1);
  // Survivors as allocation indices, so heap addresses drop out.
  auto survivors = [&](std::uint64_t seed) {
    oracle::RecordingBacking rec;
    auto live = precondition(AdversarialConfig{"x", 200.0, 0.5, seed}, p, rec);
    std::set<std::size_t> idx;
    for (void* q : live.live())
      for (std::size_t i = 0; i < rec.blocks.size(); ++i)
        if (rec.blocks[i].base == q) idx.insert(i);
    live.release(rec);
    return idx;
  };
  auto a = survivors(1);
  CHECK(a.size() == 100);
  CHECK(survivors(1) == a);
  CHECK(survivors(2) != a);
}

TEST_CASE("exhaustion is a precondition failure and leaks nothing") {
  auto p = AllocationProfile::from_counts({{64, 1}}, 100, 4096, 100);
  LedgerBacking ledger;
  LimitedBacking limited(64 * 500, SIZE_MAX, ledger);
  try {
    precondition(AdversarialConfig{"x", 10.0, 0.5, 1}, p, limited);
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Precondition);
  }
  CHECK(ledger.outstanding() == 0);
}

TEST_CASE("empty profile with a real multiplier") {
  CountingBacking counter;
  try {
    precondition(AdversarialConfig{"x", 1.0, 0.5, 1}, AllocationProfile{}, counter);
    FAIL("expected failure");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Precondition);
  }
}

}  // TEST_SUITE
