#pragma once

#include <cstddef>
#include <cstdint>
#include <unordered_set>
#include <vector>

#include "cma/backing.hpp"
#include "cma/region.hpp"

namespace cma {

struct ClassPoolOptions {
  AllocatorMode mode = AllocatorMode::Custom;
  // Tracks freelist membership so double frees and foreign pointers throw
  // InvalidFree. Off by default: plain per-class pools do not detect them.
  bool debug_accounting = false;
};

struct ClassPoolStats {
  std::uint64_t object_allocations = 0;
  std::uint64_t reused = 0;
  std::uint64_t backing_allocations = 0;
  std::uint64_t backing_frees = 0;
};

// Per-class allocator for one fixed object size. Freed objects are threaded
// onto a LIFO freelist through their own first word; nothing is returned to
// the backing allocator until the pool is destroyed.
class ClassPool {
 public:
  ClassPool(BackingAllocator& backing, std::size_t object_size,
            ClassPoolOptions options = {});
  ~ClassPool();

  ClassPool(const ClassPool&) = delete;
  ClassPool& operator=(const ClassPool&) = delete;

  void* allocate();
  void deallocate(void* obj);

  std::size_t object_size() const { return object_size_; }
  std::size_t freelist_length() const { return freelist_length_; }
  const ClassPoolStats& stats() const { return stats_; }

 private:
  struct FreeSlot {
    FreeSlot* next;
  };

  BackingAllocator* backing_;
  std::size_t object_size_;
  ClassPoolOptions options_;
  FreeSlot* free_head_ = nullptr;
  std::size_t freelist_length_ = 0;
  std::vector<void*> owned_;
  std::unordered_set<void*> on_freelist_;
  std::unordered_set<void*> owned_set_;
  ClassPoolStats stats_;
};

}  // namespace cma
