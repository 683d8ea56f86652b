#include "cma/workloads.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <fstream>
#include <new>
#include <sstream>

#include "cma/class_pool.hpp"
#include "cma/error.hpp"
#include "cma/mem_pool.hpp"
#include "cma/stack_heap.hpp"

namespace cma {
namespace {

// Order-sensitive checksum step.
constexpr std::uint64_t fold(std::uint64_t h, std::uint64_t v) {
  return (h ^ v) * 0x100000001B3ULL;
}

constexpr std::uint64_t value_of(std::uint64_t seed, std::uint64_t i) { return mix_seed(seed, i); }

// Stream tags so each workload draws from its own sequence.
enum Stream : std::uint64_t {
  kSizes = 0x5151,
  kValues = 0x7a7a,
  kOps = 0x0b0b,
  kPhase = 0x9e9e,
};

void store_u64(void* p, std::uint64_t v) { std::memcpy(p, &v, sizeof v); }
std::uint64_t load_u64(const void* p) {
  std::uint64_t v;
  std::memcpy(&v, p, sizeof v);
  return v;
}

[[noreturn]] void rethrow_with_context(const Error& e, const WorkloadSpec& spec) {
  const ErrorCode code =
      e.code() == ErrorCode::AllocationFailure ? ErrorCode::Workload : e.code();
  fail(code, spec.name + ": " + e.what());
}

template <typename Body>
WorkloadResult guarded(const WorkloadSpec& spec, Body&& body) {
  try {
    return body();
  } catch (const Error& e) {
    rethrow_with_context(e, spec);
  } catch (const std::bad_alloc&) {
    fail(ErrorCode::Workload, spec.name + ": out of memory");
  }
}

struct ListNode {
  ListNode* next;
  std::uint64_t value;
};

}  // namespace

SizeModel SizeModel::sampled(std::shared_ptr<const AllocationProfile> p, std::string path) {
  if (!p || p->empty()) fail(ErrorCode::Sampling, "size model needs a non-empty profile");
  SizeModel m{Kind::Profile, p->counts().begin()->first, p->counts().rbegin()->first, std::move(p),
              std::move(path)};
  return m;
}

std::size_t SizeModel::smallest() const { return min; }

SizeStream::SizeStream(const SizeModel& model, std::uint64_t seed)
    : model_(&model), rng_(mix_seed(seed, kSizes)) {
  if (model.kind == SizeModel::Kind::Profile) {
    if (!model.profile || model.profile->empty())
      fail(ErrorCode::Sampling, "size model references an empty profile");
    std::uint64_t running = 0;
    for (auto [size, count] : model.profile->counts()) {
      running += count;
      cumulative_.push_back(running);
      sizes_.push_back(size);
    }
  }
  if (model.kind == SizeModel::Kind::Uniform && model.min > model.max)
    fail(ErrorCode::InvalidArgument, "uniform size model with min > max");
}

std::size_t SizeStream::next() {
  switch (model_->kind) {
    case SizeModel::Kind::Fixed:
      return model_->min;
    case SizeModel::Kind::Uniform:
      return model_->min + static_cast<std::size_t>(rng_.below(model_->max - model_->min + 1));
    case SizeModel::Kind::Profile: {
      auto r = rng_.below(cumulative_.back());
      auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), r);
      return sizes_[static_cast<std::size_t>(it - cumulative_.begin())];
    }
  }
  return model_->min;
}

std::vector<std::string> workload_names() {
  return {"list-churn", "stack-parse", "pool-churn", "region-phases", "class-churn"};
}

bool is_workload_name(std::string_view name) {
  for (const auto& n : workload_names())
    if (n == name) return true;
  return false;
}

WorkloadSpec default_workload(std::string_view name) {
  WorkloadSpec spec;
  spec.name = std::string(name);
  if (name == "list-churn") {
    spec.object_count = 100000;
    spec.size = SizeModel::fixed(32);
    spec.traversal_passes = 10;
  } else if (name == "stack-parse") {
    spec.object_count = 100000;
    spec.size = SizeModel::uniform(16, 128);
    spec.traversal_passes = 1;
    spec.churn_ratio = 0.05;
    spec.depth = 64;
  } else if (name == "pool-churn") {
    spec.object_count = 100000;
    spec.size = SizeModel::fixed(32);
    spec.traversal_passes = 10;
    spec.churn_ratio = 0.25;
  } else if (name == "region-phases") {
    spec.object_count = 100000;
    spec.size = SizeModel::uniform(16, 64);
    spec.traversal_passes = 2;
    spec.phases = 4;
  } else if (name == "class-churn") {
    spec.object_count = 1000;
    spec.size = SizeModel::fixed(16);
    spec.traversal_passes = 1000;
  } else {
    fail(ErrorCode::InvalidArgument, "unknown workload '" + std::string(name) + "'");
  }
  return spec;
}

WorkloadResult run_list_churn(const WorkloadSpec& spec, AllocatorMode mode,
                              BackingAllocator& backing, const AllocatorSettings& settings) {
  if (spec.size.smallest() < sizeof(ListNode))
    fail(ErrorCode::InvalidArgument, "list-churn nodes need at least " +
                                         std::to_string(sizeof(ListNode)) + " bytes");
  return guarded(spec, [&] {
    WorkloadResult result;
    result.trace.reserve(spec.object_count);
    result.trace_object_size = spec.size.is_fixed() ? spec.size.min : sizeof(ListNode);

    RegionOptions options;
    options.chunk_size = settings.chunk_size;
    options.growth = settings.growth;
    options.mode = mode;
    Region region(backing, options);
    SizeStream sizes(spec.size, spec.seed);

    ListNode* head = nullptr;
    ListNode* tail = nullptr;
    for (std::uint64_t i = 0; i < spec.object_count; ++i) {
      auto* node = new (region.allocate(sizes.next())) ListNode{nullptr, value_of(spec.seed, i)};
      (tail != nullptr ? tail->next : head) = node;
      tail = node;
    }

    std::uint64_t h = 0;
    for (std::uint32_t pass = 0; pass < spec.traversal_passes; ++pass) {
      for (const ListNode* n = head; n != nullptr; n = n->next) {
        h = fold(h, n->value);
        if (pass == 0) result.trace.push_back(reinterpret_cast<std::uintptr_t>(n));
      }
    }
    result.checksum = h;
    result.objects_allocated = region.stats().object_allocations;
    result.aligned_bytes = region.stats().aligned_bytes;
    result.visits = spec.object_count * spec.traversal_passes;
    region.reset();
    return result;
  });
}

WorkloadResult run_stack_parse(const WorkloadSpec& spec, AllocatorMode mode,
                               BackingAllocator& backing, const AllocatorSettings& settings) {
  if (spec.size.smallest() < sizeof(std::uint64_t))
    fail(ErrorCode::InvalidArgument, "stack-parse objects need at least 8 bytes");
  if (spec.depth == 0) fail(ErrorCode::InvalidArgument, "stack-parse depth must be positive");
  return guarded(spec, [&] {
    WorkloadResult result;
    StackHeap heap(backing, StackHeapOptions{settings.stack_capacity, mode});
    SizeStream sizes(spec.size, spec.seed);
    Rng ops(mix_seed(spec.seed, kOps));

    std::vector<void*> stack;
    stack.reserve(spec.depth);
    std::uint64_t h = 0;
    auto release = [&](std::size_t index) {
      void* obj = stack[index];
      h = fold(h, load_u64(obj));
      heap.deallocate(obj);
      stack.erase(stack.begin() + static_cast<std::ptrdiff_t>(index));
    };

    std::uint64_t allocated = 0;
    while (allocated < spec.object_count) {
      const bool push = stack.empty() || (stack.size() < spec.depth && ops.below(2) == 0);
      if (push) {
        void* obj;
        try {
          obj = heap.allocate(sizes.next());
        } catch (const Error& e) {
          if (e.code() != ErrorCode::AllocationFailure) throw;
          fail(ErrorCode::Workload, std::string("workload sizing: ") + e.what());
        }
        store_u64(obj, value_of(spec.seed, allocated));
        stack.push_back(obj);
        ++allocated;
      } else if (stack.size() > 1 && ops.unit() < spec.churn_ratio) {
        release(static_cast<std::size_t>(ops.below(stack.size() - 1)));
      } else {
        release(stack.size() - 1);
      }
    }
    while (!stack.empty()) release(stack.size() - 1);

    result.checksum = h;
    result.objects_allocated = allocated;
    result.final_stack_top = heap.top();
    return result;
  });
}

WorkloadResult run_pool_churn(const WorkloadSpec& spec, AllocatorMode mode,
                              BackingAllocator& backing, const AllocatorSettings& settings) {
  if (!spec.size.is_fixed()) fail(ErrorCode::InvalidArgument, "pool-churn needs a fixed object size");
  if (spec.size.min < sizeof(std::uint64_t))
    fail(ErrorCode::InvalidArgument, "pool-churn objects need at least 8 bytes");
  if (spec.churn_ratio < 0.0 || spec.churn_ratio > 1.0)
    fail(ErrorCode::InvalidArgument, "churn ratio must lie in [0, 1]");
  return guarded(spec, [&] {
    WorkloadResult result;
    MemPool pool(backing, spec.size.min, MemPoolOptions{settings.objects_per_chunk, mode});
    Rng ops(mix_seed(spec.seed, kOps));

    const std::size_t count = spec.object_count;
    std::vector<void*> handles(count);
    std::uint64_t next_value = 0;
    for (std::size_t i = 0; i < count; ++i) {
      handles[i] = pool.allocate();
      store_u64(handles[i], value_of(spec.seed, next_value++));
    }

    std::vector<std::size_t> order(count);
    for (std::size_t i = 0; i < count; ++i) order[i] = i;
    const auto churn = static_cast<std::size_t>(spec.churn_ratio * static_cast<double>(count) + 0.5);

    std::uint64_t h = 0;
    for (std::uint32_t pass = 0; pass < spec.traversal_passes; ++pass) {
      // Partial Fisher-Yates picks `churn` distinct victims.
      for (std::size_t j = 0; j < churn; ++j) {
        std::size_t k = j + static_cast<std::size_t>(ops.below(count - j));
        std::swap(order[j], order[k]);
        pool.deallocate(handles[order[j]]);
      }
      for (std::size_t j = 0; j < churn; ++j) {
        void* obj = pool.allocate();
        store_u64(obj, value_of(spec.seed, next_value++));
        handles[order[j]] = obj;
      }
      // Visit order differs between slot walk and hash set, so the per-pass
      // sum is commutative; passes fold in order.
      std::uint64_t sum = 0;
      std::uint64_t visits = pool.iterate([&](void* obj) { sum += mix_seed(load_u64(obj), 0); });
      h = fold(fold(h, sum), visits);
      result.visits += visits;
    }
    for (void* obj : handles) pool.deallocate(obj);

    result.checksum = h;
    result.objects_allocated = pool.stats().object_allocations;
    return result;
  });
}

std::vector<std::size_t> region_phase_sizes(const WorkloadSpec& spec, std::uint32_t phase) {
  SizeStream sizes(spec.size, mix_seed(spec.seed, kPhase + phase));
  std::vector<std::size_t> out(spec.object_count);
  for (auto& s : out) s = sizes.next();
  return out;
}

WorkloadResult run_region_phases(const WorkloadSpec& spec, AllocatorMode mode,
                                 BackingAllocator& backing, const AllocatorSettings& settings) {
  if (spec.size.smallest() < sizeof(std::uint64_t))
    fail(ErrorCode::InvalidArgument, "region-phases objects need at least 8 bytes");
  return guarded(spec, [&] {
    WorkloadResult result;
    RegionOptions options;
    options.chunk_size = settings.chunk_size;
    options.growth = settings.growth;
    options.mode = mode;
    Region region(backing, options);

    std::vector<void*> objects;
    objects.reserve(spec.object_count);
    result.trace.reserve(spec.phases > 0 ? spec.object_count : 0);
    result.trace_object_size = spec.size.is_fixed() ? spec.size.min : sizeof(std::uint64_t);

    std::uint64_t h = 0;
    for (std::uint32_t phase = 0; phase < spec.phases; ++phase) {
      const auto sizes = region_phase_sizes(spec, phase);
      objects.clear();
      for (std::size_t i = 0; i < sizes.size(); ++i) {
        void* obj = region.allocate(sizes[i]);
        store_u64(obj, value_of(spec.seed, (std::uint64_t{phase} << 40) + i));
        objects.push_back(obj);
      }
      for (std::uint32_t pass = 0; pass < spec.traversal_passes; ++pass)
        for (void* obj : objects) h = fold(h, load_u64(obj));
      if (phase == 0)
        for (void* obj : objects) result.trace.push_back(reinterpret_cast<std::uintptr_t>(obj));
      result.visits += objects.size() * spec.traversal_passes;
      region.reset();
    }
    result.checksum = h;
    result.objects_allocated = region.stats().object_allocations;
    result.aligned_bytes = region.stats().aligned_bytes;
    return result;
  });
}

WorkloadResult run_class_churn(const WorkloadSpec& spec, AllocatorMode mode,
                               BackingAllocator& backing, const AllocatorSettings&) {
  if (!spec.size.is_fixed()) fail(ErrorCode::InvalidArgument, "class-churn needs a fixed object size");
  return guarded(spec, [&] {
    WorkloadResult result;
    ClassPool pool(backing, spec.size.min, ClassPoolOptions{mode, false});
    std::vector<void*> batch(spec.object_count);
    std::uint64_t h = 0;
    std::uint64_t next_value = 0;
    for (std::uint32_t round = 0; round < spec.traversal_passes; ++round) {
      for (auto& obj : batch) {
        obj = pool.allocate();
        store_u64(obj, value_of(spec.seed, next_value++));
      }
      for (auto it = batch.rbegin(); it != batch.rend(); ++it) {
        h = fold(h, load_u64(*it));
        pool.deallocate(*it);
      }
    }
    result.checksum = h;
    result.objects_allocated = pool.stats().object_allocations;
    return result;
  });
}

WorkloadResult run_workload(const WorkloadSpec& spec, AllocatorMode mode,
                            BackingAllocator& backing, const AllocatorSettings& settings) {
  if (spec.name == "list-churn") return run_list_churn(spec, mode, backing, settings);
  if (spec.name == "stack-parse") return run_stack_parse(spec, mode, backing, settings);
  if (spec.name == "pool-churn") return run_pool_churn(spec, mode, backing, settings);
  if (spec.name == "region-phases") return run_region_phases(spec, mode, backing, settings);
  if (spec.name == "class-churn") return run_class_churn(spec, mode, backing, settings);
  fail(ErrorCode::InvalidArgument, "unknown workload '" + spec.name + "'");
}

// ---------------------------------------------------------------------------
// Config files

std::string format_workload_config(const WorkloadSpec& spec) {
  std::ostringstream out;
  out << "# cma workload\n";
  out << "workload " << spec.name << "\n";
  out << "object_count " << spec.object_count << "\n";
  switch (spec.size.kind) {
    case SizeModel::Kind::Fixed: out << "size fixed " << spec.size.min << "\n"; break;
    case SizeModel::Kind::Uniform:
      out << "size uniform " << spec.size.min << ' ' << spec.size.max << "\n";
      break;
    case SizeModel::Kind::Profile: out << "size profile " << spec.size.profile_path << "\n"; break;
  }
  out << "passes " << spec.traversal_passes << "\n";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, spec.churn_ratio);
  out << "churn " << std::string_view(buf, static_cast<std::size_t>(end - buf)) << "\n";
  out << "phases " << spec.phases << "\n";
  out << "depth " << spec.depth << "\n";
  out << "seed " << spec.seed << "\n";
  return out.str();
}

namespace {

[[noreturn]] void config_error(std::size_t line, const std::string& what) {
  fail(ErrorCode::Parse, "workload config line " + std::to_string(line) + ": " + what);
}

template <typename T>
T parse_number(std::string_view word, std::size_t line) {
  T value{};
  if (!word.empty() && word.front() == '-' && std::is_unsigned_v<T>)
    config_error(line, "negative value '" + std::string(word) + "'");
  auto [ptr, ec] = std::from_chars(word.data(), word.data() + word.size(), value);
  if (ec != std::errc{} || ptr != word.data() + word.size())
    config_error(line, "bad number '" + std::string(word) + "'");
  return value;
}

}  // namespace

WorkloadSpec parse_workload_config(std::string_view text, const std::filesystem::path& base_dir) {
  std::vector<std::pair<std::size_t, std::vector<std::string>>> entries;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  std::size_t name_line = 0;
  std::string name;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream words(line);
    std::vector<std::string> w;
    for (std::string s; words >> s;) w.push_back(s);
    if (w.empty() || w[0][0] == '#') continue;
    if (w[0] == "workload") {
      if (w.size() != 2) config_error(line_no, "'workload' takes 1 value(s)");
      if (name_line != 0) config_error(line_no, "duplicate 'workload' line");
      if (!is_workload_name(w[1])) config_error(line_no, "unknown workload '" + w[1] + "'");
      name = w[1];
      name_line = line_no;
      continue;
    }
    entries.emplace_back(line_no, std::move(w));
  }
  if (name_line == 0) config_error(line_no, "missing 'workload' line");

  // Keys override the named workload's defaults.
  WorkloadSpec spec = default_workload(name);
  for (const auto& [at, w] : entries) {
    const std::string& key = w[0];
    auto need = [&, at = at](std::size_t n) {
      if (w.size() != n)
        config_error(at, "'" + key + "' takes " + std::to_string(n - 1) + " value(s)");
    };
    if (key == "object_count") {
      need(2);
      spec.object_count = parse_number<std::uint64_t>(w[1], at);
    } else if (key == "size") {
      if (w.size() < 2) config_error(at, "'size' needs a kind");
      if (w[1] == "fixed") {
        need(3);
        spec.size = SizeModel::fixed(parse_number<std::size_t>(w[2], at));
      } else if (w[1] == "uniform") {
        need(4);
        spec.size = SizeModel::uniform(parse_number<std::size_t>(w[2], at),
                                       parse_number<std::size_t>(w[3], at));
        if (spec.size.min > spec.size.max) config_error(at, "uniform size with min > max");
      } else if (w[1] == "profile") {
        need(3);
        std::filesystem::path p = w[2];
        if (p.is_relative() && !base_dir.empty()) p = base_dir / p;
        spec.size = SizeModel::sampled(std::make_shared<AllocationProfile>(load_profile(p)), w[2]);
      } else {
        config_error(at, "unknown size model '" + w[1] + "'");
      }
      if (spec.size.min == 0) config_error(at, "object size must be positive");
    } else if (key == "passes") {
      need(2);
      spec.traversal_passes = parse_number<std::uint32_t>(w[1], at);
    } else if (key == "churn") {
      need(2);
      spec.churn_ratio = parse_number<double>(w[1], at);
      if (!(spec.churn_ratio >= 0.0 && spec.churn_ratio <= 1.0))
        config_error(at, "churn must lie in [0, 1]");
    } else if (key == "phases") {
      need(2);
      spec.phases = parse_number<std::uint32_t>(w[1], at);
    } else if (key == "depth") {
      need(2);
      spec.depth = parse_number<std::uint32_t>(w[1], at);
    } else if (key == "seed") {
      need(2);
      spec.seed = parse_number<std::uint64_t>(w[1], at);
    } else {
      config_error(at, "unknown key '" + key + "'");
    }
  }
  return spec;
}

WorkloadSpec load_workload_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open workload config '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_workload_config(buf.str(), path.parent_path());
}

}  // namespace cma
