#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "cma/backing.hpp"

namespace cma {

enum class AllocatorMode { Custom, Naive };

const char* to_string(AllocatorMode mode) noexcept;
AllocatorMode parse_allocator_mode(const std::string& text);

// One contiguous block obtained from the backing allocator.
struct Chunk {
  std::byte* base = nullptr;
  std::size_t capacity = 0;
  std::size_t used = 0;
  bool dedicated = false;  // holds a single oversized (or naive-mode) object

  std::size_t available() const { return capacity - used; }
  bool contains(const void* p) const {
    auto* b = static_cast<const std::byte*>(p);
    return b >= base && b < base + used;
  }
};

enum class ChunkGrowth { Fixed, Doubling };

struct RegionOptions {
  std::size_t chunk_size = 65536;
  std::size_t alignment = 16;
  // Chunk payloads start at this alignment so that cache-line membership of
  // objects does not depend on where the backing allocator placed the chunk.
  std::size_t chunk_alignment = 64;
  ChunkGrowth growth = ChunkGrowth::Fixed;
  std::size_t max_chunk_size = std::size_t{1} << 20;
  // One chunk per object (chunk size shrunk to fit single objects).
  AllocatorMode mode = AllocatorMode::Custom;
};

struct RegionStats {
  std::uint64_t object_allocations = 0;
  std::uint64_t backing_allocations = 0;
  std::uint64_t backing_frees = 0;
  std::uint64_t oversized_chunks = 0;
  std::uint64_t aligned_bytes = 0;  // sum of aligned request sizes
};

// Chunked bump allocator. Objects are never freed individually; reset()
// returns every chunk, free_to() returns everything allocated after a mark.
class Region {
 public:
  explicit Region(BackingAllocator& backing, RegionOptions options = {});
  ~Region();

  Region(const Region&) = delete;
  Region& operator=(const Region&) = delete;

  void* allocate(std::size_t size);
  void reset() noexcept;
  // nullptr means "everything" and behaves like reset().
  void free_to(void* mark);

  // Snapshot in allocation order.
  std::vector<Chunk> chunks() const;
  std::size_t chunk_count() const { return chunk_count_; }
  const RegionStats& stats() const { return stats_; }
  const RegionOptions& options() const { return options_; }
  bool naive() const { return options_.mode == AllocatorMode::Naive; }

 private:
  struct ChunkHeader;

  Chunk& acquire_chunk(std::size_t capacity, bool dedicated);
  void release_back() noexcept;
  Chunk* back();
  std::size_t next_chunk_capacity() const;

  BackingAllocator* backing_;
  RegionOptions options_;
  // Custom mode keeps chunk records inside the chunks, so the region never
  // allocates bookkeeping between two of its chunks. Naive mode has no room
  // for a header and tracks objects out of line.
  ChunkHeader* tail_ = nullptr;
  std::vector<Chunk> naive_objects_;
  std::size_t chunk_count_ = 0;
  std::size_t regular_chunks_ = 0;
  RegionStats stats_;
};

}  // namespace cma
