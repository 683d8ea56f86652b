#include "cma/region.hpp"

#include <algorithm>
#include <bit>
#include <string>

#include "cma/error.hpp"

namespace cma {

const char* to_string(AllocatorMode mode) noexcept {
  return mode == AllocatorMode::Custom ? "custom" : "naive";
}

AllocatorMode parse_allocator_mode(const std::string& text) {
  if (text == "custom") return AllocatorMode::Custom;
  if (text == "naive") return AllocatorMode::Naive;
  fail(ErrorCode::InvalidArgument, "unknown allocator mode '" + text + "'");
}

struct Region::ChunkHeader {
  ChunkHeader* prev;
  Chunk chunk;
};

namespace {

constexpr std::size_t kHeaderBytes = align_up(sizeof(void*) + sizeof(Chunk), 16);

// Extra bytes requested per custom-mode chunk: room for the header plus
// alignment slack. The total keeps a chunk plus a 16-byte allocator header a
// whole number of alignment units, so consecutive chunks carved from the same
// heap extent sit at a fixed stride.
std::size_t chunk_overhead(std::size_t chunk_alignment) {
  return align_up(kHeaderBytes + chunk_alignment, chunk_alignment) - 16;
}

}  // namespace

Region::Region(BackingAllocator& backing, RegionOptions options)
    : backing_(&backing), options_(options) {
  if (!std::has_single_bit(options_.alignment) ||
      !std::has_single_bit(options_.chunk_alignment))
    fail(ErrorCode::InvalidArgument, "region alignment must be a power of two");
  if (options_.chunk_alignment < 16)
    fail(ErrorCode::InvalidArgument, "region chunk alignment must be at least 16");
  if (options_.chunk_size == 0 || options_.chunk_size % options_.alignment != 0)
    fail(ErrorCode::InvalidArgument,
         "chunk size must be a positive multiple of the alignment");
}

Region::~Region() { reset(); }

std::size_t Region::next_chunk_capacity() const {
  if (options_.growth == ChunkGrowth::Fixed) return options_.chunk_size;
  std::size_t capacity = options_.chunk_size;
  for (std::size_t i = 0; i < regular_chunks_ && capacity < options_.max_chunk_size; ++i)
    capacity *= 2;
  return std::min(std::max(capacity, options_.chunk_size),
                  std::max(options_.max_chunk_size, options_.chunk_size));
}

Chunk* Region::back() {
  if (naive()) return naive_objects_.empty() ? nullptr : &naive_objects_.back();
  return tail_ == nullptr ? nullptr : &tail_->chunk;
}

std::vector<Chunk> Region::chunks() const {
  if (naive()) return naive_objects_;
  std::vector<Chunk> out;
  out.reserve(chunk_count_);
  for (const ChunkHeader* h = tail_; h != nullptr; h = h->prev) out.push_back(h->chunk);
  std::reverse(out.begin(), out.end());
  return out;
}

Chunk& Region::acquire_chunk(std::size_t capacity, bool dedicated) {
  if (naive()) {
    void* base = backing_->allocate(capacity, options_.alignment);
    if (base == nullptr)
      fail(ErrorCode::AllocationFailure,
           "backing allocator refused a " + std::to_string(capacity) + "-byte object");
    try {
      naive_objects_.push_back(Chunk{static_cast<std::byte*>(base), capacity, 0, true});
    } catch (...) {
      backing_->deallocate(base);
      throw;
    }
    ++stats_.backing_allocations;
    ++chunk_count_;
    return naive_objects_.back();
  }

  void* raw = backing_->allocate(capacity + chunk_overhead(options_.chunk_alignment));
  if (raw == nullptr)
    fail(ErrorCode::AllocationFailure,
         "backing allocator refused a region chunk of " + std::to_string(capacity) + " bytes");
  auto* header = static_cast<ChunkHeader*>(raw);
  auto addr = reinterpret_cast<std::uintptr_t>(raw) + kHeaderBytes;
  auto* base = reinterpret_cast<std::byte*>(align_up(addr, options_.chunk_alignment));
  header->prev = tail_;
  header->chunk = Chunk{base, capacity, 0, dedicated};
  tail_ = header;
  ++stats_.backing_allocations;
  ++chunk_count_;
  if (!dedicated) ++regular_chunks_;
  return header->chunk;
}

void Region::release_back() noexcept {
  if (naive()) {
    backing_->deallocate(naive_objects_.back().base);
    naive_objects_.pop_back();
  } else {
    ChunkHeader* h = tail_;
    tail_ = h->prev;
    if (!h->chunk.dedicated) --regular_chunks_;
    backing_->deallocate(h);
  }
  ++stats_.backing_frees;
  --chunk_count_;
}

void* Region::allocate(std::size_t size) {
  if (size == 0) fail(ErrorCode::InvalidArgument, "region allocation of zero bytes");
  const std::size_t aligned = align_up(size, options_.alignment);

  Chunk* chunk = back();
  if (naive()) {
    chunk = &acquire_chunk(aligned, true);
  } else if (chunk == nullptr || chunk->available() < aligned) {
    if (aligned > options_.chunk_size) {
      chunk = &acquire_chunk(aligned, true);
      ++stats_.oversized_chunks;
    } else {
      chunk = &acquire_chunk(next_chunk_capacity(), false);
    }
  }

  void* object = chunk->base + chunk->used;
  chunk->used += aligned;
  ++stats_.object_allocations;
  stats_.aligned_bytes += aligned;
  return object;
}

void Region::reset() noexcept {
  while (chunk_count_ > 0) release_back();
}

void Region::free_to(void* mark) {
  if (mark == nullptr) {
    reset();
    return;
  }
  // Walk from the newest chunk; everything newer than the owner goes.
  std::size_t newer = 0;
  Chunk* owner = nullptr;
  if (naive()) {
    for (auto it = naive_objects_.rbegin(); it != naive_objects_.rend(); ++it, ++newer)
      if (it->contains(mark)) {
        owner = &*it;
        break;
      }
  } else {
    for (ChunkHeader* h = tail_; h != nullptr; h = h->prev, ++newer)
      if (h->chunk.contains(mark)) {
        owner = &h->chunk;
        break;
      }
  }
  if (owner == nullptr)
    fail(ErrorCode::InvalidMark, "free_to mark does not lie in a live region chunk");

  std::size_t offset = static_cast<std::size_t>(static_cast<std::byte*>(mark) - owner->base);
  if (offset % options_.alignment != 0)
    fail(ErrorCode::InvalidMark, "free_to mark is not an object boundary");

  // In naive mode each chunk holds one object, so the owner goes too.
  if (naive())
    ++newer;
  else
    owner->used = offset;
  for (; newer > 0; --newer) release_back();
}

}  // namespace cma
