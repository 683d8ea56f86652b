#pragma once

#include <cstddef>
#include <cstdint>

#include "cma/backing.hpp"
#include "cma/region.hpp"

namespace cma {

struct StackHeapOptions {
  std::size_t capacity = std::size_t{64} << 20;
  AllocatorMode mode = AllocatorMode::Custom;
};

// malloc/free-style heap over one buffer provisioned up front. Objects are
// laid out back to back, each preceded by a 16-byte header. Freeing marks the
// header dead; when the topmost object dies the bump cursor rolls back over
// every trailing dead object, so space is recycled only in stack order.
class StackHeap {
 public:
  static constexpr std::size_t kHeaderSize = 16;
  static constexpr std::size_t kAlignment = 16;

  explicit StackHeap(BackingAllocator& backing, StackHeapOptions options = {});
  ~StackHeap();

  StackHeap(const StackHeap&) = delete;
  StackHeap& operator=(const StackHeap&) = delete;

  void* allocate(std::size_t size);
  void deallocate(void* obj);

  const std::byte* base() const { return buffer_; }
  std::size_t top() const { return top_; }
  std::size_t capacity() const { return options_.capacity; }
  std::size_t live_objects() const { return live_; }
  bool naive() const { return options_.mode == AllocatorMode::Naive; }

 private:
  struct Header {
    std::uint64_t prev;  // offset of previous header + 1, or 0 for the first object
    std::uint64_t word;  // aligned payload size | tag | live bit
  };
  static_assert(sizeof(Header) == kHeaderSize);

  Header* header_at(std::size_t offset) const;

  BackingAllocator* backing_;
  StackHeapOptions options_;
  std::byte* buffer_ = nullptr;
  std::size_t top_ = 0;
  std::uint64_t last_ = 0;  // offset of the last header + 1, or 0 when empty
  std::size_t live_ = 0;
};

}  // namespace cma
