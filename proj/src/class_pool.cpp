#include "cma/class_pool.hpp"

#include <string>

#include "cma/error.hpp"

namespace cma {

ClassPool::ClassPool(BackingAllocator& backing, std::size_t object_size,
                     ClassPoolOptions options)
    : backing_(&backing), object_size_(object_size), options_(options) {
  if (object_size_ < sizeof(void*))
    fail(ErrorCode::InvalidArgument, "class pool object size " + std::to_string(object_size) +
                                         " cannot hold a freelist link");
}

ClassPool::~ClassPool() {
  // Naive mode forwards frees immediately, so owned_ only holds custom-mode blocks.
  for (void* p : owned_) {
    backing_->deallocate(p);
    ++stats_.backing_frees;
  }
}

void* ClassPool::allocate() {
  ++stats_.object_allocations;
  if (options_.mode == AllocatorMode::Custom && free_head_ != nullptr) {
    FreeSlot* slot = free_head_;
    free_head_ = slot->next;
    --freelist_length_;
    ++stats_.reused;
    if (options_.debug_accounting) on_freelist_.erase(slot);
    return slot;
  }
  void* p = backing_->allocate(object_size_);
  if (p == nullptr) {
    --stats_.object_allocations;
    fail(ErrorCode::AllocationFailure, "backing allocator refused a " +
                                           std::to_string(object_size_) + "-byte object");
  }
  ++stats_.backing_allocations;
  if (options_.mode == AllocatorMode::Custom) {
    owned_.push_back(p);
    if (options_.debug_accounting) owned_set_.insert(p);
  }
  return p;
}

void ClassPool::deallocate(void* obj) {
  if (obj == nullptr) return;
  if (options_.mode == AllocatorMode::Naive) {
    backing_->deallocate(obj);
    ++stats_.backing_frees;
    return;
  }
  if (options_.debug_accounting) {
    if (owned_set_.count(obj) == 0)
      fail(ErrorCode::InvalidFree, "class pool free of an address it never returned");
    if (!on_freelist_.insert(obj).second)
      fail(ErrorCode::InvalidFree, "class pool double free");
  }
  auto* slot = static_cast<FreeSlot*>(obj);
  slot->next = free_head_;
  free_head_ = slot;
  ++freelist_length_;
}

}  // namespace cma
