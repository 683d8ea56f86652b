#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <unordered_set>

namespace cma {

// The general-purpose allocator that custom allocators draw their memory
// from. allocate() returns nullptr on exhaustion; callers turn that into an
// AllocationFailure.
class BackingAllocator {
 public:
  virtual ~BackingAllocator() = default;

  virtual void* allocate(std::size_t size, std::size_t alignment = 16) = 0;
  virtual void deallocate(void* p) noexcept = 0;
  virtual std::string name() const = 0;
};

// Forwards to the process allocator (malloc/free, or posix_memalign for
// alignments above the malloc guarantee).
class SystemBacking final : public BackingAllocator {
 public:
  void* allocate(std::size_t size, std::size_t alignment = 16) override;
  void deallocate(void* p) noexcept override;
  std::string name() const override;
};

// Process-wide instance.
SystemBacking& system_backing();

struct BackingCounts {
  std::uint64_t allocations = 0;
  std::uint64_t frees = 0;
  std::uint64_t bytes = 0;
  std::uint64_t failures = 0;

  std::uint64_t outstanding() const { return allocations - frees; }
  friend bool operator==(const BackingCounts&, const BackingCounts&) = default;
};

// Counting shim. Every op-count assertion in the library and its tests goes
// through one of these.
class CountingBacking final : public BackingAllocator {
 public:
  explicit CountingBacking(BackingAllocator& inner = system_backing())
      : inner_(&inner) {}

  void* allocate(std::size_t size, std::size_t alignment = 16) override;
  void deallocate(void* p) noexcept override;
  std::string name() const override { return inner_->name(); }

  const BackingCounts& counts() const { return counts_; }
  void reset_counts() { counts_ = {}; }

 private:
  BackingAllocator* inner_;
  BackingCounts counts_;
};

// Fails every request once the byte budget (or request budget) is spent.
class LimitedBacking final : public BackingAllocator {
 public:
  LimitedBacking(std::size_t max_bytes, std::size_t max_requests = SIZE_MAX,
                 BackingAllocator& inner = system_backing())
      : inner_(&inner), bytes_left_(max_bytes), requests_left_(max_requests) {}

  void* allocate(std::size_t size, std::size_t alignment = 16) override;
  void deallocate(void* p) noexcept override { inner_->deallocate(p); }
  std::string name() const override { return "limited(" + inner_->name() + ")"; }

 private:
  BackingAllocator* inner_;
  std::size_t bytes_left_;
  std::size_t requests_left_;
};

// Keeps the set of outstanding blocks; frees of unknown blocks are counted
// instead of forwarded. Used by leak and double-release checks in tests.
class LedgerBacking final : public BackingAllocator {
 public:
  explicit LedgerBacking(BackingAllocator& inner = system_backing())
      : inner_(&inner) {}
  ~LedgerBacking() override;

  void* allocate(std::size_t size, std::size_t alignment = 16) override;
  void deallocate(void* p) noexcept override;
  std::string name() const override { return inner_->name(); }

  std::size_t outstanding() const { return live_.size(); }
  std::uint64_t bad_frees() const { return bad_frees_; }
  bool owns(const void* p) const { return live_.count(const_cast<void*>(p)) != 0; }

 private:
  BackingAllocator* inner_;
  std::unordered_set<void*> live_;
  std::uint64_t bad_frees_ = 0;
};

// alignment must be a power of two.
constexpr std::size_t align_up(std::size_t n, std::size_t alignment) {
  return (n + alignment - 1) & ~(alignment - 1);
}

}  // namespace cma
