#include "cma/mem_pool.hpp"

#include <algorithm>
#include <string>

#include "cma/error.hpp"

namespace cma {

MemPool::MemPool(BackingAllocator& backing, std::size_t object_size, MemPoolOptions options)
    : backing_(&backing),
      object_size_(object_size),
      slot_size_(align_up(std::max(object_size, sizeof(void*)), 16)),
      options_(options) {
  if (object_size == 0) fail(ErrorCode::InvalidArgument, "mem pool object size must be positive");
  if (options_.objects_per_chunk == 0)
    fail(ErrorCode::InvalidArgument, "mem pool needs at least one object per chunk");
}

MemPool::~MemPool() {
  for (const PoolChunk& chunk : chunks_) backing_->deallocate(chunk.base);
  for (void* obj : naive_live_) backing_->deallocate(obj);
}

std::size_t MemPool::unallocated_slots() const {
  // A new chunk is only acquired once the previous one is fully bumped.
  return chunks_.empty() ? 0 : options_.objects_per_chunk - chunks_.back().bumped;
}

bool MemPool::is_live(const void* obj) const {
  if (naive()) return naive_live_.count(const_cast<void*>(obj)) != 0;
  auto it = chunk_by_base_.upper_bound(static_cast<const std::byte*>(obj));
  if (it == chunk_by_base_.begin()) return false;
  --it;
  const PoolChunk& chunk = chunks_[it->second];
  auto offset = static_cast<std::size_t>(static_cast<const std::byte*>(obj) - chunk.base);
  if (offset % slot_size_ != 0 || offset / slot_size_ >= chunk.bumped) return false;
  return chunk.live(offset / slot_size_);
}

std::pair<std::size_t, std::size_t> MemPool::locate(const void* obj) const {
  auto it = chunk_by_base_.upper_bound(static_cast<const std::byte*>(obj));
  if (it != chunk_by_base_.begin()) {
    --it;
    const PoolChunk& chunk = chunks_[it->second];
    auto offset = static_cast<std::size_t>(static_cast<const std::byte*>(obj) - chunk.base);
    if (offset % slot_size_ == 0 && offset / slot_size_ < chunk.bumped)
      return {it->second, offset / slot_size_};
  }
  fail(ErrorCode::InvalidFree, "mem pool free of an address it does not own");
}

void* MemPool::allocate() {
  if (naive()) {
    void* p = backing_->allocate(object_size_);
    if (p == nullptr) fail(ErrorCode::AllocationFailure, "backing allocator refused an object");
    ++stats_.backing_allocations;
    ++stats_.object_allocations;
    naive_live_.insert(p);
    ++live_;
    return p;
  }

  void* obj = nullptr;
  if (free_head_ != nullptr) {
    FreeSlot* slot = free_head_;
    free_head_ = slot->next;
    --freelist_length_;
    obj = slot;
    auto [c, s] = locate(obj);
    chunks_[c].set_live(s, true);
  } else {
    if (chunks_.empty() || chunks_.back().bumped == options_.objects_per_chunk) {
      const std::size_t bytes = slot_size_ * options_.objects_per_chunk;
      auto* base = static_cast<std::byte*>(backing_->allocate(bytes, 16));
      if (base == nullptr)
        fail(ErrorCode::AllocationFailure,
             "backing allocator refused a " + std::to_string(bytes) + "-byte pool chunk");
      ++stats_.backing_allocations;
      chunks_.push_back(PoolChunk{base, 0, std::vector<std::uint64_t>(
                                               (options_.objects_per_chunk + 63) / 64, 0)});
      chunk_by_base_.emplace(base, chunks_.size() - 1);
    }
    PoolChunk& chunk = chunks_.back();
    obj = chunk.base + chunk.bumped * slot_size_;
    chunk.set_live(chunk.bumped, true);
    ++chunk.bumped;
  }
  ++live_;
  ++stats_.object_allocations;
  return obj;
}

void MemPool::deallocate(void* obj) {
  if (obj == nullptr) return;
  if (naive()) {
    if (naive_live_.erase(obj) == 0)
      fail(ErrorCode::InvalidFree, "mem pool free of an address that is not live");
    backing_->deallocate(obj);
    ++stats_.backing_frees;
    --live_;
    return;
  }
  auto [c, s] = locate(obj);
  if (!chunks_[c].live(s)) fail(ErrorCode::InvalidFree, "mem pool double free");
  chunks_[c].set_live(s, false);
  auto* slot = static_cast<FreeSlot*>(obj);
  slot->next = free_head_;
  free_head_ = slot;
  ++freelist_length_;
  --live_;
}

}  // namespace cma
