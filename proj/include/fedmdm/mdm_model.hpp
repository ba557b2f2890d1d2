#pragma once

// Mixture-of-Dirichlet-Multinomials: parameter set and probability mass
// functions. All pmfs are evaluated in log space.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <vector>

namespace fedmdm {

/// log(0). Flows through log-sum-exp; pmf functions never return NaN.
inline constexpr double kLogZero = -std::numeric_limits<double>::infinity();

/// One federated client: histogram of the modelled feature plus its sample
/// count. Invariant: sum(counts) == n, n >= 1.
struct ClientRecord {
  std::vector<std::int64_t> counts;
  std::int64_t n = 0;

  std::size_t categories() const { return counts.size(); }

  /// Throws ContractError when the invariants do not hold.
  void validate() const;

  friend bool operator==(const ClientRecord&, const ClientRecord&) = default;
};

/// Sparse distribution over sample counts {1..N}: count -> probability.
using SampleCountDist = std::map<std::int64_t, double>;

/// Immutable MDM parameter set (tau, A, Pi). Construction validates every
/// invariant; instances are safe to share across threads.
class MdmParams {
 public:
  /// `alpha` is K rows of C entries. Throws ContractError on any violated
  /// invariant (tau/pi normalization within 1e-9, alpha > 0, shapes, pi
  /// support within 1..N).
  MdmParams(std::vector<double> tau, std::vector<std::vector<double>> alpha,
            std::vector<SampleCountDist> pi, std::int64_t N);

  std::size_t K() const { return tau_.size(); }
  std::size_t C() const { return C_; }
  std::int64_t N() const { return N_; }

  std::span<const double> tau() const { return tau_; }
  double tau(std::size_t k) const { return tau_[k]; }
  std::span<const double> alpha(std::size_t k) const {
    return {alpha_.data() + k * C_, C_};
  }
  /// Row sum of alpha(k).
  double alpha0(std::size_t k) const { return alpha0_[k]; }
  const SampleCountDist& pi(std::size_t k) const { return pi_[k]; }
  const std::vector<SampleCountDist>& pi() const { return pi_; }

  /// pi_k(n), zero when n is outside the support.
  double pi_at(std::size_t k, std::int64_t n) const;

  std::vector<std::vector<double>> alpha_rows() const;

  /// Reorder components: output component j is input component perm[j].
  MdmParams permuted(std::span<const std::size_t> perm) const;

  friend bool operator==(const MdmParams&, const MdmParams&) = default;

 private:
  std::vector<double> tau_;
  std::vector<double> alpha_;  // K x C row-major
  std::vector<double> alpha0_;
  std::vector<SampleCountDist> pi_;
  std::size_t C_ = 0;
  std::int64_t N_ = 0;
};

/// Max-shifted log(sum(exp(v))). Returns kLogZero when every entry is
/// kLogZero or v is empty.
double log_sum_exp(std::span<const double> v);

/// Dirichlet-multinomial log pmf, ln p(c | n, alpha), via log_gamma only.
double log_dm_pmf(std::span<const std::int64_t> counts, std::int64_t n,
                  std::span<const double> alpha);

/// ln p(c | n, alpha) + ln pi_n; kLogZero when pi_n == 0.
double log_joint_pmf(const ClientRecord& rec, std::span<const double> alpha,
                     const SampleCountDist& pi);

/// Per-component ln(tau_k) + log_joint_pmf.
std::vector<double> component_log_weights(const ClientRecord& rec,
                                          const MdmParams& params);

/// ln q(c, n | tau, A, Pi).
double log_mdm_pmf(const ClientRecord& rec, const MdmParams& params);

/// Sum of log_mdm_pmf over records. Throws ContractError on an empty list.
double log_likelihood(std::span<const ClientRecord> records,
                      const MdmParams& params);

/// Normalized posterior weights from per-component log weights. Throws
/// DegenerateClientError when every entry is kLogZero.
std::vector<double> normalize_log_weights(std::span<const double> log_weights);

/// Posterior component probabilities omega for one client.
std::vector<double> responsibilities(const ClientRecord& rec,
                                     const MdmParams& params);

}  // namespace fedmdm
