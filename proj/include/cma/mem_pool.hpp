#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <unordered_set>
#include <vector>

#include "cma/backing.hpp"
#include "cma/region.hpp"

namespace cma {

struct MemPoolOptions {
  std::size_t objects_per_chunk = 256;
  // Naive mode sends every object to the backing allocator and keeps the live
  // set in a hash set so iteration still works.
  AllocatorMode mode = AllocatorMode::Custom;
};

struct MemPoolStats {
  std::uint64_t object_allocations = 0;
  std::uint64_t backing_allocations = 0;
  std::uint64_t backing_frees = 0;
};

// Fixed-size object pool carved out of chunks of objects_per_chunk slots.
// Freed slots go on a LIFO freelist for immediate reuse. Chunks are held
// until the pool is destroyed. Supports iteration over live objects while the
// visitor allocates and frees.
class MemPool {
 public:
  MemPool(BackingAllocator& backing, std::size_t object_size, MemPoolOptions options = {});
  ~MemPool();

  MemPool(const MemPool&) = delete;
  MemPool& operator=(const MemPool&) = delete;

  void* allocate();
  void deallocate(void* obj);

  // Walks chunks in acquisition order and slots in address order, visiting a
  // slot iff it is live when the walk reaches it. Slots the walk has already
  // passed are not revisited, so objects allocated into them mid-walk are
  // skipped. Naive mode visits a snapshot of the hash set, filtered the same
  // way. Returns the number of visits.
  template <typename Visit>
  std::size_t iterate(Visit&& visit);

  std::size_t object_size() const { return object_size_; }
  std::size_t slot_size() const { return slot_size_; }
  std::size_t objects_per_chunk() const { return options_.objects_per_chunk; }
  std::size_t live_count() const { return live_; }
  std::size_t freelist_length() const { return freelist_length_; }
  std::size_t chunk_count() const { return chunks_.size(); }
  std::size_t total_slots() const { return chunks_.size() * options_.objects_per_chunk; }
  std::size_t unallocated_slots() const;
  bool naive() const { return options_.mode == AllocatorMode::Naive; }
  bool is_live(const void* obj) const;
  const MemPoolStats& stats() const { return stats_; }

 private:
  struct PoolChunk {
    std::byte* base;
    std::size_t bumped;  // slots handed out by bumping (the rest were never used)
    std::vector<std::uint64_t> live_bits;

    bool live(std::size_t slot) const { return (live_bits[slot / 64] >> (slot % 64)) & 1; }
    void set_live(std::size_t slot, bool on) {
      const std::uint64_t bit = std::uint64_t{1} << (slot % 64);
      if (on) live_bits[slot / 64] |= bit; else live_bits[slot / 64] &= ~bit;
    }
  };
  struct FreeSlot {
    FreeSlot* next;
  };

  // Returns (chunk index, slot index), or throws InvalidFree.
  std::pair<std::size_t, std::size_t> locate(const void* obj) const;

  BackingAllocator* backing_;
  std::size_t object_size_;
  std::size_t slot_size_;
  MemPoolOptions options_;
  std::vector<PoolChunk> chunks_;
  std::map<const std::byte*, std::size_t> chunk_by_base_;
  FreeSlot* free_head_ = nullptr;
  std::size_t freelist_length_ = 0;
  std::size_t live_ = 0;
  std::unordered_set<void*> naive_live_;
  MemPoolStats stats_;
};

template <typename Visit>
std::size_t MemPool::iterate(Visit&& visit) {
  std::size_t visits = 0;
  if (naive()) {
    std::vector<void*> snapshot(naive_live_.begin(), naive_live_.end());
    for (void* obj : snapshot) {
      if (naive_live_.count(obj) == 0) continue;
      ++visits;
      visit(obj);
    }
    return visits;
  }
  // Sizes are re-read every step: the visitor may grow the pool.
  for (std::size_t c = 0; c < chunks_.size(); ++c) {
    for (std::size_t s = 0; s < chunks_[c].bumped; ++s) {
      if (!chunks_[c].live(s)) continue;
      ++visits;
      visit(static_cast<void*>(chunks_[c].base + s * slot_size_));
    }
  }
  return visits;
}

}  // namespace cma
