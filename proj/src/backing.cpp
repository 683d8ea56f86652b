#include "cma/backing.hpp"

#include <cstdlib>

#if defined(__GLIBC__)
#include <gnu/libc-version.h>
#endif

namespace cma {

void* SystemBacking::allocate(std::size_t size, std::size_t alignment) {
  if (alignment <= alignof(std::max_align_t)) return std::malloc(size);
  void* p = nullptr;
  if (posix_memalign(&p, alignment, size) != 0) return nullptr;
  return p;
}

void SystemBacking::deallocate(void* p) noexcept { std::free(p); }

std::string SystemBacking::name() const {
#if defined(__GLIBC__)
  return std::string("glibc-malloc-") + gnu_get_libc_version();
#else
  return "system-malloc";
#endif
}

SystemBacking& system_backing() {
  static SystemBacking instance;
  return instance;
}

void* CountingBacking::allocate(std::size_t size, std::size_t alignment) {
  void* p = inner_->allocate(size, alignment);
  if (p == nullptr) {
    ++counts_.failures;
    return nullptr;
  }
  ++counts_.allocations;
  counts_.bytes += size;
  return p;
}

void CountingBacking::deallocate(void* p) noexcept {
  if (p == nullptr) return;
  ++counts_.frees;
  inner_->deallocate(p);
}

void* LimitedBacking::allocate(std::size_t size, std::size_t alignment) {
  if (size > bytes_left_ || requests_left_ == 0) return nullptr;
  void* p = inner_->allocate(size, alignment);
  if (p != nullptr) {
    bytes_left_ -= size;
    --requests_left_;
  }
  return p;
}

LedgerBacking::~LedgerBacking() {
  for (void* p : live_) inner_->deallocate(p);
}

void* LedgerBacking::allocate(std::size_t size, std::size_t alignment) {
  void* p = inner_->allocate(size, alignment);
  if (p != nullptr) live_.insert(p);
  return p;
}

void LedgerBacking::deallocate(void* p) noexcept {
  if (p == nullptr) return;
  if (live_.erase(p) == 0) {
    ++bad_frees_;
    return;
  }
  inner_->deallocate(p);
}

}  // namespace cma
