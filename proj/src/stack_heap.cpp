#include "cma/stack_heap.hpp"

#include <string>

#include "cma/error.hpp"

namespace cma {
namespace {

constexpr std::uint64_t kLiveBit = 0x1;
constexpr std::uint64_t kTagMask = 0xE;
constexpr std::uint64_t kTag = 0xA;
constexpr std::uint64_t kSizeMask = ~std::uint64_t{0xF};

}  // namespace

StackHeap::StackHeap(BackingAllocator& backing, StackHeapOptions options)
    : backing_(&backing), options_(options) {
  if (naive()) return;
  options_.capacity = options_.capacity / kAlignment * kAlignment;
  if (options_.capacity < kHeaderSize + kAlignment)
    fail(ErrorCode::InvalidArgument, "stack heap capacity too small");
  buffer_ = static_cast<std::byte*>(backing_->allocate(options_.capacity, kAlignment));
  if (buffer_ == nullptr)
    fail(ErrorCode::AllocationFailure, "backing allocator refused the " +
                                           std::to_string(options_.capacity) +
                                           "-byte stack heap buffer");
}

StackHeap::~StackHeap() {
  if (buffer_ != nullptr) backing_->deallocate(buffer_);
}

StackHeap::Header* StackHeap::header_at(std::size_t offset) const {
  return reinterpret_cast<Header*>(buffer_ + offset);
}

void* StackHeap::allocate(std::size_t size) {
  if (size == 0) fail(ErrorCode::InvalidArgument, "stack heap allocation of zero bytes");
  if (naive()) {
    void* p = backing_->allocate(size);
    if (p == nullptr) fail(ErrorCode::AllocationFailure, "backing allocator refused an object");
    ++live_;
    return p;
  }
  const std::size_t aligned = align_up(size, kAlignment);
  if (aligned > options_.capacity || kHeaderSize + aligned > options_.capacity - top_)
    fail(ErrorCode::AllocationFailure, "stack heap full: " + std::to_string(size) +
                                           " bytes requested, " +
                                           std::to_string(options_.capacity - top_) + " left");
  Header* h = header_at(top_);
  h->prev = last_;
  h->word = aligned | kTag | kLiveBit;
  last_ = top_ + 1;
  top_ += kHeaderSize + aligned;
  ++live_;
  return reinterpret_cast<std::byte*>(h) + kHeaderSize;
}

void StackHeap::deallocate(void* obj) {
  if (obj == nullptr) return;
  if (naive()) {
    backing_->deallocate(obj);
    --live_;
    return;
  }
  auto* p = static_cast<std::byte*>(obj);
  if (p < buffer_ + kHeaderSize || p >= buffer_ + top_ ||
      static_cast<std::size_t>(p - buffer_) % kAlignment != 0)
    fail(ErrorCode::InvalidFree, "stack heap free of an address outside the live stack");
  const std::size_t offset = static_cast<std::size_t>(p - buffer_) - kHeaderSize;
  Header* h = header_at(offset);
  if ((h->word & kTagMask) != kTag || (h->word & kLiveBit) == 0)
    fail(ErrorCode::InvalidFree, "stack heap free of an address that is not a live object");

  h->word &= ~kLiveBit;
  --live_;
  if (offset + 1 != last_) return;

  // Roll back over the freed top object and any dead objects beneath it.
  std::uint64_t cursor = last_;
  while (cursor != 0) {
    Header* cur = header_at(cursor - 1);
    if (cur->word & kLiveBit) break;
    top_ = cursor - 1;
    cursor = cur->prev;
  }
  last_ = cursor;
  if (cursor == 0) top_ = 0;
}

}  // namespace cma
