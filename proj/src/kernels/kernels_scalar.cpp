#include "fedmdm/kernels.hpp"
#include "fedmdm/special_fn.hpp"

namespace fedmdm::kernels {
namespace {

double dm_log_terms_scalar(const double* counts, const double* alpha,
                           std::size_t len) {
  double acc = 0.0;
  for (std::size_t j = 0; j < len; ++j) {
    if (counts[j] == 0.0) continue;
    acc += special_fn::log_gamma(counts[j] + alpha[j]) -
           special_fn::log_gamma(alpha[j]) -
           special_fn::log_gamma(counts[j] + 1.0);
  }
  return acc;
}

void digamma_diff_axpy_scalar(const double* counts, const double* alpha,
                              double weight, double* out, std::size_t len) {
  for (std::size_t j = 0; j < len; ++j) {
    if (counts[j] == 0.0) continue;
    out[j] += weight * (special_fn::digamma(counts[j] + alpha[j]) -
                        special_fn::digamma(alpha[j]));
  }
}

void accumulate_scalar(double* dst, const double* src, std::size_t len) {
  for (std::size_t j = 0; j < len; ++j) dst[j] += src[j];
}

void log_gamma_batch_scalar(const double* x, double* out, std::size_t len) {
  for (std::size_t j = 0; j < len; ++j) out[j] = special_fn::log_gamma(x[j]);
}

void digamma_batch_scalar(const double* x, double* out, std::size_t len) {
  for (std::size_t j = 0; j < len; ++j) out[j] = special_fn::digamma(x[j]);
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{
      Isa::scalar,           &dm_log_terms_scalar,    &digamma_diff_axpy_scalar,
      &accumulate_scalar,    &log_gamma_batch_scalar, &digamma_batch_scalar,
  };
  return table;
}

}  // namespace fedmdm::kernels
