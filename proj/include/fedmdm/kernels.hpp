#pragma once

// Batched inner loops of the per-client statistics computation.
//
// Every kernel has a scalar reference implementation; wider instruction-set
// variants are selected at runtime when the CPU supports them and must agree
// with the reference to within the tolerances checked in test_kernels.cpp.

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>

namespace fedmdm::kernels {

enum class Isa { scalar, avx2, neon };

std::string_view isa_name(Isa isa);
std::optional<Isa> parse_isa(std::string_view name);

struct KernelTable {
  Isa isa;

  // sum_j [ lgamma(c_j + a_j) - lgamma(a_j) - lgamma(c_j + 1) ]
  double (*dm_log_terms)(const double* counts, const double* alpha,
                         std::size_t len);

  // out_j += weight * (digamma(c_j + a_j) - digamma(a_j))
  void (*digamma_diff_axpy)(const double* counts, const double* alpha,
                            double weight, double* out, std::size_t len);

  // dst_j += src_j
  void (*accumulate)(double* dst, const double* src, std::size_t len);

  // Element-wise special functions, exposed for equivalence testing.
  void (*log_gamma_batch)(const double* x, double* out, std::size_t len);
  void (*digamma_batch)(const double* x, double* out, std::size_t len);
};

const KernelTable& scalar_table();

/// Table for `isa`, or nullptr when that variant was not compiled in or the
/// running CPU lacks the instructions.
const KernelTable* table_for(Isa isa);

/// Widest variant usable on this machine.
Isa best_available();

/// Currently selected table. The first call honours FEDMDM_KERNELS
/// (scalar|avx2|neon) when set, otherwise picks best_available().
const KernelTable& active();

/// Force a variant. Returns false (and leaves the selection unchanged) when
/// the variant is unavailable.
bool select(Isa isa);

// Span front ends over active().
double dm_log_terms(std::span<const double> counts,
                    std::span<const double> alpha);
void digamma_diff_axpy(std::span<const double> counts,
                       std::span<const double> alpha, double weight,
                       std::span<double> out);
void accumulate(std::span<double> dst, std::span<const double> src);

}  // namespace fedmdm::kernels
