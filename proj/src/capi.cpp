#include "cma/cma.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "cma/adversary.hpp"
#include "cma/bench.hpp"
#include "cma/class_pool.hpp"
#include "cma/error.hpp"
#include "cma/locality.hpp"
#include "cma/mem_pool.hpp"
#include "cma/profile.hpp"
#include "cma/region.hpp"
#include "cma/report.hpp"
#include "cma/stack_heap.hpp"
#include "cma/workloads.hpp"

static_assert(static_cast<int>(cma::ErrorCode::InvalidArgument) == CMA_E_INVALID_ARGUMENT);
static_assert(static_cast<int>(cma::ErrorCode::Precondition) == CMA_E_PRECONDITION);
static_assert(static_cast<int>(cma::ErrorCode::Io) == CMA_E_IO);

struct cma_backing {
  std::unique_ptr<cma::LimitedBacking> limited;
  std::unique_ptr<cma::CountingBacking> counting;
};

struct cma_region {
  cma::Region impl;
};

struct cma_class_pool {
  cma::ClassPool impl;
};

struct cma_stack_heap {
  cma::StackHeap impl;
};

struct cma_mem_pool {
  cma::MemPool impl;
};

struct cma_profile {
  cma::AllocationProfile impl;
};

struct cma_ledger {
  cma::LiveLedger impl;
};

struct cma_report {
  std::vector<cma::RunReport> reports;
};

namespace {

thread_local std::string last_error;

template <typename Body>
cma_status guard(Body&& body) noexcept {
  try {
    body();
    return CMA_OK;
  } catch (const cma::Error& e) {
    last_error = e.what();
    return static_cast<cma_status>(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return CMA_E_ALLOCATION_FAILURE;
  } catch (const std::exception& e) {
    last_error = e.what();
    return CMA_E_INTERNAL;
  } catch (...) {
    last_error = "unknown error";
    return CMA_E_INTERNAL;
  }
}

template <typename T>
void require(T* p, const char* what) {
  if (p == nullptr) cma::fail(cma::ErrorCode::InvalidArgument, std::string(what) + " is NULL");
}

cma::AllocatorMode to_mode(cma_mode mode) {
  if (mode == CMA_MODE_CUSTOM) return cma::AllocatorMode::Custom;
  if (mode == CMA_MODE_NAIVE) return cma::AllocatorMode::Naive;
  cma::fail(cma::ErrorCode::InvalidArgument, "unknown allocator mode");
}

cma::BackingAllocator& backing_of(cma_backing* b) {
  require(b, "backing");
  return *b->counting;
}

// Non-owning shared_ptr for borrowed handles.
std::shared_ptr<const cma::AllocationProfile> borrow(const cma_profile* p) {
  if (p == nullptr) return nullptr;
  return std::shared_ptr<const cma::AllocationProfile>(std::shared_ptr<void>{}, &p->impl);
}

cma::WorkloadSpec to_spec(const cma_workload_spec& c) {
  cma::WorkloadSpec spec;
  spec.name = std::string(c.name, strnlen(c.name, sizeof c.name));
  if (!cma::is_workload_name(spec.name))
    cma::fail(cma::ErrorCode::InvalidArgument, "unknown workload '" + spec.name + "'");
  spec.object_count = c.object_count;
  switch (c.size_kind) {
    case CMA_SIZE_FIXED: spec.size = cma::SizeModel::fixed(c.size_min); break;
    case CMA_SIZE_UNIFORM: spec.size = cma::SizeModel::uniform(c.size_min, c.size_max); break;
    case CMA_SIZE_PROFILE: spec.size = cma::SizeModel::sampled(borrow(c.size_profile)); break;
    default: cma::fail(cma::ErrorCode::InvalidArgument, "unknown size kind");
  }
  spec.traversal_passes = c.traversal_passes;
  spec.churn_ratio = c.churn_ratio;
  spec.seed = c.seed;
  spec.phases = c.phases;
  spec.depth = c.depth;
  return spec;
}

void from_spec(const cma::WorkloadSpec& spec, cma_workload_spec* out) {
  std::memset(out, 0, sizeof *out);
  std::strncpy(out->name, spec.name.c_str(), sizeof out->name - 1);
  out->object_count = spec.object_count;
  out->size_kind = spec.size.kind == cma::SizeModel::Kind::Fixed     ? CMA_SIZE_FIXED
                   : spec.size.kind == cma::SizeModel::Kind::Uniform ? CMA_SIZE_UNIFORM
                                                                      : CMA_SIZE_PROFILE;
  out->size_min = spec.size.min;
  out->size_max = spec.size.max;
  out->traversal_passes = spec.traversal_passes;
  out->churn_ratio = spec.churn_ratio;
  out->seed = spec.seed;
  out->phases = spec.phases;
  out->depth = spec.depth;
}

cma::AllocatorSettings to_settings(const cma_allocator_settings* c) {
  cma::AllocatorSettings s;
  if (c == nullptr) return s;
  if (c->chunk_size) s.chunk_size = c->chunk_size;
  if (c->objects_per_chunk) s.objects_per_chunk = c->objects_per_chunk;
  if (c->stack_capacity) s.stack_capacity = c->stack_capacity;
  return s;
}

cma::RunRequest to_request(const cma_run_options& o) {
  cma::RunRequest r;
  r.workload = to_spec(o.workload);
  r.mode = to_mode(o.mode);
  r.adversary.name = std::string(o.adversary_name, strnlen(o.adversary_name, sizeof o.adversary_name));
  if (r.adversary.name.empty()) r.adversary.name = "custom";
  r.adversary.multiplier = o.adversary.multiplier;
  r.adversary.occupancy = o.adversary.occupancy;
  r.adversary.seed = o.adversary.seed;
  r.profile = borrow(o.profile);
  r.reps = o.reps == 0 ? 7 : o.reps;
  r.line_size = o.line_size == 0 ? 64 : o.line_size;
  r.allocator = to_settings(&o.allocator);
  return r;
}

void to_c(const cma::LocalityReport& r, cma_locality* out) {
  out->objects = r.objects;
  out->unique_lines = r.unique_lines;
  out->lines_per_object = r.lines_per_object;
  out->mean_traversal_gap = r.mean_traversal_gap;
  out->span = r.span;
}

char* dup_string(const std::string& s) {
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (p == nullptr) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  return p;
}

const cma::RunReport& report_at(const cma_report* r, std::size_t index) {
  require(r, "report");
  if (index >= r->reports.size()) cma::fail(cma::ErrorCode::InvalidArgument, "report index out of range");
  return r->reports[index];
}

}  // namespace

extern "C" {

const char* cma_last_error(void) { return last_error.c_str(); }

const char* cma_status_name(cma_status status) {
  if (status == CMA_OK) return "ok";
  if (status == CMA_E_INTERNAL) return "internal";
  return cma::to_string(static_cast<cma::ErrorCode>(status));
}

void cma_string_free(char* s) { std::free(s); }

// ---- backing

cma_status cma_backing_create(size_t max_bytes, cma_backing** out) {
  return guard([&] {
    require(out, "out");
    auto b = std::make_unique<cma_backing>();
    if (max_bytes != 0) {
      b->limited = std::make_unique<cma::LimitedBacking>(max_bytes);
      b->counting = std::make_unique<cma::CountingBacking>(*b->limited);
    } else {
      b->counting = std::make_unique<cma::CountingBacking>();
    }
    *out = b.release();
  });
}

void cma_backing_destroy(cma_backing* backing) { delete backing; }

void cma_backing_counts_get(const cma_backing* backing, cma_backing_counts* out) {
  if (backing == nullptr || out == nullptr) return;
  const auto& c = backing->counting->counts();
  *out = cma_backing_counts{c.allocations, c.frees, c.bytes, c.failures};
}

void cma_backing_counts_reset(cma_backing* backing) {
  if (backing != nullptr) backing->counting->reset_counts();
}

// ---- region

cma_status cma_region_create(cma_backing* backing, const cma_region_options* options,
                             cma_region** out) {
  return guard([&] {
    require(out, "out");
    cma::RegionOptions opts;
    if (options != nullptr) {
      if (options->chunk_size) opts.chunk_size = options->chunk_size;
      if (options->alignment) opts.alignment = options->alignment;
      opts.growth = options->doubling_growth ? cma::ChunkGrowth::Doubling : cma::ChunkGrowth::Fixed;
      opts.mode = to_mode(options->mode);
    }
    *out = new cma_region{cma::Region(backing_of(backing), opts)};
  });
}

void cma_region_destroy(cma_region* region) { delete region; }

cma_status cma_region_allocate(cma_region* region, size_t size, void** out) {
  return guard([&] {
    require(region, "region");
    require(out, "out");
    *out = region->impl.allocate(size);
  });
}

void cma_region_reset(cma_region* region) {
  if (region != nullptr) region->impl.reset();
}

cma_status cma_region_free_to(cma_region* region, void* mark) {
  return guard([&] {
    require(region, "region");
    region->impl.free_to(mark);
  });
}

size_t cma_region_chunk_count(const cma_region* region) {
  return region == nullptr ? 0 : region->impl.chunk_count();
}

// ---- class pool

cma_status cma_class_pool_create(cma_backing* backing, size_t object_size, cma_mode mode,
                                 int debug_accounting, cma_class_pool** out) {
  return guard([&] {
    require(out, "out");
    *out = new cma_class_pool{cma::ClassPool(backing_of(backing), object_size,
                                             cma::ClassPoolOptions{to_mode(mode), debug_accounting != 0})};
  });
}

void cma_class_pool_destroy(cma_class_pool* pool) { delete pool; }

cma_status cma_class_pool_allocate(cma_class_pool* pool, void** out) {
  return guard([&] {
    require(pool, "pool");
    require(out, "out");
    *out = pool->impl.allocate();
  });
}

cma_status cma_class_pool_free(cma_class_pool* pool, void* obj) {
  return guard([&] {
    require(pool, "pool");
    pool->impl.deallocate(obj);
  });
}

size_t cma_class_pool_freelist_length(const cma_class_pool* pool) {
  return pool == nullptr ? 0 : pool->impl.freelist_length();
}

// ---- stack heap

cma_status cma_stack_heap_create(cma_backing* backing, size_t capacity, cma_mode mode,
                                 cma_stack_heap** out) {
  return guard([&] {
    require(out, "out");
    cma::StackHeapOptions opts;
    if (capacity) opts.capacity = capacity;
    opts.mode = to_mode(mode);
    *out = new cma_stack_heap{cma::StackHeap(backing_of(backing), opts)};
  });
}

void cma_stack_heap_destroy(cma_stack_heap* heap) { delete heap; }

cma_status cma_stack_heap_allocate(cma_stack_heap* heap, size_t size, void** out) {
  return guard([&] {
    require(heap, "heap");
    require(out, "out");
    *out = heap->impl.allocate(size);
  });
}

cma_status cma_stack_heap_free(cma_stack_heap* heap, void* obj) {
  return guard([&] {
    require(heap, "heap");
    heap->impl.deallocate(obj);
  });
}

size_t cma_stack_heap_top(const cma_stack_heap* heap) { return heap == nullptr ? 0 : heap->impl.top(); }

// ---- mem pool

cma_status cma_mem_pool_create(cma_backing* backing, size_t object_size, size_t objects_per_chunk,
                               cma_mode mode, cma_mem_pool** out) {
  return guard([&] {
    require(out, "out");
    cma::MemPoolOptions opts;
    if (objects_per_chunk) opts.objects_per_chunk = objects_per_chunk;
    opts.mode = to_mode(mode);
    *out = new cma_mem_pool{cma::MemPool(backing_of(backing), object_size, opts)};
  });
}

void cma_mem_pool_destroy(cma_mem_pool* pool) { delete pool; }

cma_status cma_mem_pool_allocate(cma_mem_pool* pool, void** out) {
  return guard([&] {
    require(pool, "pool");
    require(out, "out");
    *out = pool->impl.allocate();
  });
}

cma_status cma_mem_pool_free(cma_mem_pool* pool, void* obj) {
  return guard([&] {
    require(pool, "pool");
    pool->impl.deallocate(obj);
  });
}

size_t cma_mem_pool_iterate(cma_mem_pool* pool, cma_visit_fn visit, void* user) {
  if (pool == nullptr || visit == nullptr) return 0;
  return pool->impl.iterate([&](void* obj) { visit(obj, user); });
}

size_t cma_mem_pool_live_count(const cma_mem_pool* pool) {
  return pool == nullptr ? 0 : pool->impl.live_count();
}

// ---- profile

cma_status cma_profile_create(size_t cutoff, cma_profile** out) {
  return guard([&] {
    require(out, "out");
    *out = new cma_profile{cma::AllocationProfile(cutoff ? cutoff : cma::AllocationProfile::kDefaultCutoff)};
  });
}

void cma_profile_destroy(cma_profile* profile) { delete profile; }

cma_status cma_profile_record_allocation(cma_profile* profile, size_t size) {
  return guard([&] {
    require(profile, "profile");
    profile->impl.record_allocation(size);
  });
}

cma_status cma_profile_record_free(cma_profile* profile) {
  return guard([&] {
    require(profile, "profile");
    profile->impl.record_free();
  });
}

cma_status cma_profile_load(const char* path, cma_profile** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new cma_profile{cma::load_profile(path)};
  });
}

cma_status cma_profile_save(const cma_profile* profile, const char* path) {
  return guard([&] {
    require(profile, "profile");
    require(path, "path");
    cma::save_profile(profile->impl, path);
  });
}

uint64_t cma_profile_peak_live(const cma_profile* profile) {
  return profile == nullptr ? 0 : profile->impl.peak_live();
}

uint64_t cma_profile_total_recorded(const cma_profile* profile) {
  return profile == nullptr ? 0 : profile->impl.total_recorded();
}

size_t cma_profile_entry_count(const cma_profile* profile) {
  return profile == nullptr ? 0 : profile->impl.counts().size();
}

cma_status cma_profile_entry(const cma_profile* profile, size_t index, size_t* size, uint64_t* count) {
  return guard([&] {
    require(profile, "profile");
    const auto& counts = profile->impl.counts();
    if (index >= counts.size()) cma::fail(cma::ErrorCode::InvalidArgument, "profile entry index out of range");
    auto it = std::next(counts.begin(), static_cast<std::ptrdiff_t>(index));
    if (size) *size = it->first;
    if (count) *count = it->second;
  });
}

// ---- adversary

cma_status cma_adv_preset(const char* name, cma_adv_config* out) {
  return guard([&] {
    require(name, "name");
    require(out, "out");
    auto cfg = cma::adversarial_preset(name);
    *out = cma_adv_config{cfg.multiplier, cfg.occupancy, cfg.seed};
  });
}

cma_status cma_precondition(const cma_adv_config* config, const cma_profile* profile,
                            cma_backing* backing, cma_ledger** out) {
  return guard([&] {
    require(config, "config");
    require(profile, "profile");
    require(out, "out");
    cma::AdversarialConfig cfg{"custom", config->multiplier, config->occupancy, config->seed};
    *out = new cma_ledger{cma::precondition(cfg, profile->impl, backing_of(backing))};
  });
}

uint64_t cma_ledger_allocations(const cma_ledger* ledger) {
  return ledger == nullptr ? 0 : ledger->impl.allocations();
}

uint64_t cma_ledger_frees(const cma_ledger* ledger) { return ledger == nullptr ? 0 : ledger->impl.frees(); }

size_t cma_ledger_live_count(const cma_ledger* ledger) {
  return ledger == nullptr ? 0 : ledger->impl.live().size();
}

void cma_ledger_release(cma_ledger* ledger, cma_backing* backing) {
  if (ledger == nullptr) return;
  if (backing != nullptr) ledger->impl.release(*backing->counting);
  delete ledger;
}

void cma_ledger_destroy(cma_ledger* ledger) { delete ledger; }

// ---- workloads

size_t cma_workload_count(void) { return cma::workload_names().size(); }

const char* cma_workload_name(size_t index) {
  static const std::vector<std::string> names = cma::workload_names();
  return index < names.size() ? names[index].c_str() : nullptr;
}

cma_status cma_workload_default(const char* name, cma_workload_spec* out) {
  return guard([&] {
    require(name, "name");
    require(out, "out");
    from_spec(cma::default_workload(name), out);
  });
}

cma_status cma_workload_load(const char* path, cma_workload_spec* out, cma_profile** profile_out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    auto spec = cma::load_workload_config(path);
    cma_profile* handle = nullptr;
    if (spec.size.kind == cma::SizeModel::Kind::Profile) {
      require(profile_out, "profile_out");
      handle = new cma_profile{*spec.size.profile};
    }
    from_spec(spec, out);
    out->size_profile = handle;
    if (profile_out) *profile_out = handle;
  });
}

cma_status cma_workload_run(const cma_workload_spec* spec, cma_mode mode, cma_backing* backing,
                            const cma_allocator_settings* settings, cma_workload_result* result,
                            uintptr_t* trace, size_t trace_capacity) {
  return guard([&] {
    require(spec, "spec");
    require(result, "result");
    auto r = cma::run_workload(to_spec(*spec), to_mode(mode), backing_of(backing), to_settings(settings));
    result->checksum = r.checksum;
    result->objects_allocated = r.objects_allocated;
    result->aligned_bytes = r.aligned_bytes;
    result->visits = r.visits;
    result->final_stack_top = r.final_stack_top;
    result->trace_length = r.trace.size();
    result->trace_object_size = r.trace_object_size;
    if (trace != nullptr)
      std::memcpy(trace, r.trace.data(), std::min(trace_capacity, r.trace.size()) * sizeof(uintptr_t));
  });
}

// ---- locality

cma_status cma_analyze_trace(const uintptr_t* trace, size_t length, size_t object_size,
                             size_t line_size, cma_locality* out) {
  return guard([&] {
    require(out, "out");
    if (length > 0) require(trace, "trace");
    to_c(cma::analyze_trace({trace, length}, object_size, line_size ? line_size : 64), out);
  });
}

double cma_spearman(const double* x, const double* y, size_t n) {
  if (x == nullptr || y == nullptr) return 0.0;
  return cma::spearman({x, n}, {y, n});
}

// ---- harness

cma_status cma_run_options_default(const char* workload, cma_run_options* out) {
  return guard([&] {
    require(workload, "workload");
    require(out, "out");
    std::memset(out, 0, sizeof *out);
    from_spec(cma::default_workload(workload), &out->workload);
    out->mode = CMA_MODE_CUSTOM;
    std::strncpy(out->adversary_name, "adv0", sizeof out->adversary_name - 1);
    out->reps = 7;
    out->line_size = 64;
  });
}

cma_status cma_bench_profile(const cma_workload_spec* spec, size_t cutoff, cma_profile** out) {
  return guard([&] {
    require(spec, "spec");
    require(out, "out");
    *out = new cma_profile{
        cma::profile_workload(to_spec(*spec), cutoff ? cutoff : cma::AllocationProfile::kDefaultCutoff)};
  });
}

cma_status cma_bench_run(const cma_run_options* options, cma_report** out) {
  return guard([&] {
    require(options, "options");
    require(out, "out");
    auto report = cma::run_configuration(to_request(*options));
    *out = new cma_report{{std::move(report)}};
  });
}

cma_status cma_bench_sweep(const cma_run_options* options, double multiplier, const double* occupancies,
                           size_t occupancy_count, const uint64_t* seeds, size_t seed_count,
                           cma_report** out) {
  return guard([&] {
    require(options, "options");
    require(out, "out");
    if (occupancy_count > 0) require(occupancies, "occupancies");
    if (seed_count > 0) require(seeds, "seeds");
    auto rows = cma::sweep_occupancy(to_request(*options), multiplier, {occupancies, occupancy_count},
                                     {seeds, seed_count});
    *out = new cma_report{std::move(rows)};
  });
}

void cma_report_destroy(cma_report* report) { delete report; }

size_t cma_report_count(const cma_report* report) { return report == nullptr ? 0 : report->reports.size(); }

cma_status cma_report_render(const cma_report* report, cma_format format, char** out) {
  return guard([&] {
    require(report, "report");
    require(out, "out");
    auto fmt = format == CMA_FORMAT_JSON ? cma::ReportFormat::Json : cma::ReportFormat::Csv;
    *out = dup_string(cma::format_reports(report->reports, fmt));
  });
}

cma_status cma_report_write(const cma_report* report, cma_format format, const char* path) {
  return guard([&] {
    require(report, "report");
    require(path, "path");
    auto fmt = format == CMA_FORMAT_JSON ? cma::ReportFormat::Json : cma::ReportFormat::Csv;
    cma::write_reports(report->reports, fmt, path);
  });
}

cma_status cma_report_read(const char* path, cma_report** out) {
  return guard([&] {
    require(path, "path");
    require(out, "out");
    *out = new cma_report{cma::read_reports(path)};
  });
}

cma_status cma_report_append(cma_report* into, const cma_report* from) {
  return guard([&] {
    require(into, "into");
    require(from, "from");
    into->reports.insert(into->reports.end(), from->reports.begin(), from->reports.end());
  });
}

uint64_t cma_report_median_ns(const cma_report* report, size_t index) {
  if (report == nullptr || index >= report->reports.size()) return 0;
  return report->reports[index].median_ns;
}

uint64_t cma_report_checksum(const cma_report* report, size_t index) {
  if (report == nullptr || index >= report->reports.size()) return 0;
  return report->reports[index].checksum;
}

cma_status cma_report_locality(const cma_report* report, size_t index, cma_locality* out) {
  return guard([&] {
    require(out, "out");
    to_c(report_at(report, index).locality, out);
  });
}

cma_status cma_report_backing(const cma_report* report, size_t index, cma_backing_counts* out) {
  return guard([&] {
    require(out, "out");
    const auto& c = report_at(report, index).backing;
    *out = cma_backing_counts{c.allocations, c.frees, c.bytes, c.failures};
  });
}

const char* cma_report_error(const cma_report* report, size_t index) {
  if (report == nullptr || index >= report->reports.size()) return "";
  return report->reports[index].error.c_str();
}

cma_status cma_compare(const cma_report* reports, size_t baseline, char** out_csv) {
  return guard([&] {
    require(reports, "reports");
    require(out_csv, "out_csv");
    auto rows = cma::compare_reports(reports->reports, baseline);
    *out_csv = dup_string(cma::format_comparison(rows));
  });
}

}  // extern "C"
