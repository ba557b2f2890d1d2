#include "fedmdm/mdm_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fedmdm/errors.hpp"
#include "fedmdm/special_fn.hpp"

namespace fedmdm {
namespace {

constexpr double kSumTolerance = 1e-9;

}  // namespace

void ClientRecord::validate() const {
  if (counts.empty()) throw ContractError("client record has no categories");
  if (n < 1) throw ContractError("client record n must be >= 1");
  std::int64_t total = 0;
  for (auto c : counts) {
    if (c < 0) throw ContractError("client record has a negative count");
    total += c;
  }
  if (total != n) {
    throw ContractError("client record counts sum to " + std::to_string(total) +
                        " but n = " + std::to_string(n));
  }
}

MdmParams::MdmParams(std::vector<double> tau,
                     std::vector<std::vector<double>> alpha,
                     std::vector<SampleCountDist> pi, std::int64_t N)
    : tau_(std::move(tau)), pi_(std::move(pi)), N_(N) {
  const std::size_t k_count = tau_.size();
  if (k_count == 0) throw ContractError("MdmParams: K must be >= 1");
  if (alpha.size() != k_count || pi_.size() != k_count) {
    throw ContractError("MdmParams: tau, alpha and pi disagree on K");
  }
  if (N_ < 1) throw ContractError("MdmParams: N must be >= 1");
  C_ = alpha.front().size();
  if (C_ == 0) throw ContractError("MdmParams: C must be >= 1");

  double tau_sum = 0.0;
  for (double t : tau_) {
    if (!(t >= 0.0) || !std::isfinite(t)) {
      throw ContractError("MdmParams: tau entries must be finite and >= 0");
    }
    tau_sum += t;
  }
  if (std::abs(tau_sum - 1.0) > kSumTolerance) {
    throw ContractError("MdmParams: tau sums to " + std::to_string(tau_sum));
  }

  alpha_.reserve(k_count * C_);
  alpha0_.reserve(k_count);
  for (const auto& row : alpha) {
    if (row.size() != C_) throw ContractError("MdmParams: ragged alpha matrix");
    double row_sum = 0.0;
    for (double a : row) {
      if (!(a > 0.0) || !std::isfinite(a)) {
        throw ContractError("MdmParams: alpha entries must be finite and > 0");
      }
      row_sum += a;
    }
    alpha_.insert(alpha_.end(), row.begin(), row.end());
    alpha0_.push_back(row_sum);
  }

  for (std::size_t k = 0; k < k_count; ++k) {
    double pi_sum = 0.0;
    for (const auto& [n, p] : pi_[k]) {
      if (n < 1 || n > N_) {
        throw ContractError("MdmParams: pi support point " + std::to_string(n) +
                            " outside 1.." + std::to_string(N_));
      }
      if (!(p >= 0.0) || !std::isfinite(p)) {
        throw ContractError("MdmParams: pi probabilities must be finite and >= 0");
      }
      pi_sum += p;
    }
    if (std::abs(pi_sum - 1.0) > kSumTolerance) {
      throw ContractError("MdmParams: pi_" + std::to_string(k) + " sums to " +
                          std::to_string(pi_sum));
    }
  }
}

double MdmParams::pi_at(std::size_t k, std::int64_t n) const {
  const auto& dist = pi_[k];
  auto it = dist.find(n);
  return it == dist.end() ? 0.0 : it->second;
}

std::vector<std::vector<double>> MdmParams::alpha_rows() const {
  std::vector<std::vector<double>> rows;
  rows.reserve(K());
  for (std::size_t k = 0; k < K(); ++k) {
    auto row = alpha(k);
    rows.emplace_back(row.begin(), row.end());
  }
  return rows;
}

MdmParams MdmParams::permuted(std::span<const std::size_t> perm) const {
  if (perm.size() != K()) throw ContractError("permutation size != K");
  std::vector<bool> seen(K(), false);
  std::vector<double> tau;
  std::vector<std::vector<double>> alpha;
  std::vector<SampleCountDist> pi;
  for (std::size_t src : perm) {
    if (src >= K() || seen[src]) throw ContractError("not a permutation");
    seen[src] = true;
    tau.push_back(tau_[src]);
    auto row = this->alpha(src);
    alpha.emplace_back(row.begin(), row.end());
    pi.push_back(pi_[src]);
  }
  return MdmParams(std::move(tau), std::move(alpha), std::move(pi), N_);
}

double log_sum_exp(std::span<const double> v) {
  double peak = kLogZero;
  for (double x : v) peak = std::max(peak, x);
  if (peak == kLogZero) return kLogZero;
  double acc = 0.0;
  for (double x : v) acc += std::exp(x - peak);
  return peak + std::log(acc);
}

double log_dm_pmf(std::span<const std::int64_t> counts, std::int64_t n,
                  std::span<const double> alpha) {
  using special_fn::log_gamma;
  if (counts.size() != alpha.size()) {
    throw ContractError("log_dm_pmf: counts and alpha differ in length");
  }
  std::int64_t total = 0;
  double alpha0 = 0.0;
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] < 0) throw ContractError("log_dm_pmf: negative count");
    if (!(alpha[j] > 0.0)) throw ContractError("log_dm_pmf: alpha must be > 0");
    total += counts[j];
    alpha0 += alpha[j];
  }
  if (total != n) throw ContractError("log_dm_pmf: sum(c) != n");
  if (n == 0) return 0.0;

  const double nd = static_cast<double>(n);
  double out = log_gamma(alpha0) + log_gamma(nd + 1.0) - log_gamma(nd + alpha0);
  for (std::size_t j = 0; j < counts.size(); ++j) {
    if (counts[j] == 0) continue;
    const double c = static_cast<double>(counts[j]);
    out += log_gamma(c + alpha[j]) - log_gamma(alpha[j]) - log_gamma(c + 1.0);
  }
  return out;
}

double log_joint_pmf(const ClientRecord& rec, std::span<const double> alpha,
                     const SampleCountDist& pi) {
  const double dm = log_dm_pmf(rec.counts, rec.n, alpha);
  auto it = pi.find(rec.n);
  if (it == pi.end() || it->second <= 0.0) return kLogZero;
  return dm + std::log(it->second);
}

std::vector<double> component_log_weights(const ClientRecord& rec,
                                          const MdmParams& params) {
  if (rec.counts.size() != params.C()) {
    throw ContractError("client has " + std::to_string(rec.counts.size()) +
                        " categories, model has " + std::to_string(params.C()));
  }
  std::vector<double> out(params.K());
  for (std::size_t k = 0; k < params.K(); ++k) {
    const double t = params.tau(k);
    out[k] = t > 0.0 ? std::log(t) + log_joint_pmf(rec, params.alpha(k), params.pi(k))
                     : kLogZero;
  }
  return out;
}

double log_mdm_pmf(const ClientRecord& rec, const MdmParams& params) {
  const auto weights = component_log_weights(rec, params);
  return log_sum_exp(weights);
}

double log_likelihood(std::span<const ClientRecord> records,
                      const MdmParams& params) {
  if (records.empty()) throw ContractError("log_likelihood: empty record list");
  double total = 0.0;
  for (const auto& rec : records) total += log_mdm_pmf(rec, params);
  return total;
}

std::vector<double> normalize_log_weights(std::span<const double> log_weights) {
  const double lse = log_sum_exp(log_weights);
  if (lse == kLogZero) {
    throw DegenerateClientError(
        "every mixture component assigns zero probability to the client");
  }
  std::vector<double> out(log_weights.size());
  double total = 0.0;
  for (std::size_t k = 0; k < out.size(); ++k) {
    out[k] = std::exp(log_weights[k] - lse);
    total += out[k];
  }
  // Second pass removes the O(eps) drift left by exp/log rounding.
  for (double& w : out) w /= total;
  return out;
}

std::vector<double> responsibilities(const ClientRecord& rec,
                                     const MdmParams& params) {
  return normalize_log_weights(component_log_weights(rec, params));
}

}  // namespace fedmdm
