#include <atomic>
#include <cstdlib>
#include <string>

#include "fedmdm/errors.hpp"
#include "fedmdm/kernels.hpp"

namespace fedmdm::kernels {

#if defined(FEDMDM_HAVE_AVX2)
const KernelTable& avx2_table();
#endif
#if defined(FEDMDM_HAVE_NEON)
const KernelTable& neon_table();
#endif

namespace {

bool cpu_has_avx2() {
#if defined(FEDMDM_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

constexpr bool kHaveNeon =
#if defined(FEDMDM_HAVE_NEON)
    true;
#else
    false;
#endif

std::atomic<const KernelTable*> g_active{nullptr};

const KernelTable* initial_table() {
  if (const char* env = std::getenv("FEDMDM_KERNELS")) {
    if (auto isa = parse_isa(env)) {
      if (const KernelTable* t = table_for(*isa)) return t;
    }
  }
  return table_for(best_available());
}

void check_len(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw ContractError(std::string(what) + ": length mismatch (" +
                        std::to_string(a) + " vs " + std::to_string(b) + ")");
  }
}

}  // namespace

std::string_view isa_name(Isa isa) {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
    case Isa::neon: return "neon";
  }
  return "unknown";
}

std::optional<Isa> parse_isa(std::string_view name) {
  if (name == "scalar") return Isa::scalar;
  if (name == "avx2") return Isa::avx2;
  if (name == "neon") return Isa::neon;
  return std::nullopt;
}

const KernelTable* table_for(Isa isa) {
  switch (isa) {
    case Isa::scalar: return &scalar_table();
    case Isa::avx2:
#if defined(FEDMDM_HAVE_AVX2)
      if (cpu_has_avx2()) return &avx2_table();
#endif
      return nullptr;
    case Isa::neon:
#if defined(FEDMDM_HAVE_NEON)
      return &neon_table();
#endif
      return nullptr;
  }
  return nullptr;
}

Isa best_available() {
  if (cpu_has_avx2()) return Isa::avx2;
  return kHaveNeon ? Isa::neon : Isa::scalar;
}

const KernelTable& active() {
  const KernelTable* t = g_active.load(std::memory_order_acquire);
  if (t == nullptr) {
    const KernelTable* init = initial_table();
    g_active.compare_exchange_strong(t, init, std::memory_order_acq_rel);
    t = g_active.load(std::memory_order_acquire);
  }
  return *t;
}

bool select(Isa isa) {
  const KernelTable* t = table_for(isa);
  if (t == nullptr) return false;
  g_active.store(t, std::memory_order_release);
  return true;
}

double dm_log_terms(std::span<const double> counts,
                    std::span<const double> alpha) {
  check_len(counts.size(), alpha.size(), "dm_log_terms");
  return active().dm_log_terms(counts.data(), alpha.data(), counts.size());
}

void digamma_diff_axpy(std::span<const double> counts,
                       std::span<const double> alpha, double weight,
                       std::span<double> out) {
  check_len(counts.size(), alpha.size(), "digamma_diff_axpy");
  check_len(counts.size(), out.size(), "digamma_diff_axpy");
  active().digamma_diff_axpy(counts.data(), alpha.data(), weight, out.data(),
                             counts.size());
}

void accumulate(std::span<double> dst, std::span<const double> src) {
  check_len(dst.size(), src.size(), "accumulate");
  active().accumulate(dst.data(), src.data(), dst.size());
}

}  // namespace fedmdm::kernels
