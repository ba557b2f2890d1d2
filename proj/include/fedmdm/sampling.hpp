#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "fedmdm/mdm_model.hpp"

namespace fedmdm {

namespace detail {
/// Philox4x32 with 10 rounds (Random123 block function).
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key);
}  // namespace detail

/// Counter-based generator (Philox4x32-10) keyed by a seed and a stream id.
///
/// Identical (seed, stream) produce identical sequences on every platform.
/// `split` derives an independent child stream, so per-client draws can be
/// made in any order or in parallel without changing results.
class RngHandle {
 public:
  explicit RngHandle(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream() const { return stream_; }

  /// Child handle on a stream derived from (stream, sub); counter reset.
  RngHandle split(std::uint64_t sub) const;

  std::uint64_t next_u64();
  /// Uniform on the open interval (0, 1), 53 random bits.
  double uniform();
  /// Uniform integer in [0, bound); bound >= 1. Unbiased (Lemire).
  std::uint64_t uniform_index(std::uint64_t bound);
  /// Standard normal (Marsaglia polar method).
  double normal();

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_;
  std::uint64_t counter_ = 0;
  std::array<std::uint32_t, 4> block_{};
  int used_ = 4;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

/// log of a Gamma(shape, 1) draw. Marsaglia-Tsang with the shape < 1 boost,
/// kept in log space so tiny shapes cannot underflow.
double sample_log_gamma(double shape, RngHandle& rng);

/// p ~ Dir(alpha) via normalized gamma draws. Throws DomainError for alpha <= 0.
std::vector<double> sample_dirichlet(std::span<const double> alpha,
                                     RngHandle& rng);

/// Index drawn with probability proportional to weights (non-negative,
/// positive total).
std::size_t sample_categorical(std::span<const double> weights, RngHandle& rng);

/// c ~ Mult(n, p). p must sum to 1 within 1e-9; n < 0 throws DomainError.
std::vector<std::int64_t> sample_multinomial(std::int64_t n,
                                             std::span<const double> p,
                                             RngHandle& rng);

/// n ~ pi.
std::int64_t sample_count(const SampleCountDist& pi, RngHandle& rng);

struct LabeledClient {
  ClientRecord record;
  std::size_t component = 0;
};

/// k ~ Cat(tau), n ~ pi_k, p ~ Dir(alpha_k), c ~ Mult(n, p).
LabeledClient sample_client(const MdmParams& params, RngHandle& rng);

/// M independent clients; client i draws from rng.split(i).
std::vector<LabeledClient> gen_labeled_federation(const MdmParams& params,
                                                  std::size_t M,
                                                  const RngHandle& rng);

/// As gen_labeled_federation with the component labels discarded.
std::vector<ClientRecord> gen_synthetic_federation(const MdmParams& params,
                                                   std::size_t M,
                                                   const RngHandle& rng);

}  // namespace fedmdm
