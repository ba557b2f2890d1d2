#include "fedmdm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "fedmdm/errors.hpp"

namespace fedmdm {

double nmse(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw ContractError("nmse: length mismatch");
  double acc = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) {
    if (y[j] == 0.0) throw DomainError("nmse: zero ground-truth entry");
    const double rel = (x[j] - y[j]) / y[j];
    acc += rel * rel;
  }
  return std::sqrt(acc);
}

AlignedNmseReport align_and_score(const MdmParams& fitted,
                                  const MdmParams& truth) {
  const std::size_t K = truth.K();
  if (fitted.K() != K || fitted.C() != truth.C()) {
    throw ContractError("align_and_score: fitted and truth differ in K or C");
  }
  if (K > kMaxAlignK) {
    throw ContractError("align_and_score: K > 8 is not supported");
  }
  const std::size_t C = truth.C();

  std::vector<double> truth_alpha;
  truth_alpha.reserve(K * C);
  for (std::size_t k = 0; k < K; ++k) {
    auto row = truth.alpha(k);
    truth_alpha.insert(truth_alpha.end(), row.begin(), row.end());
  }

  std::vector<std::size_t> perm(K);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::vector<std::size_t> best = perm;
  double best_score = std::numeric_limits<double>::infinity();
  std::vector<double> candidate(K * C);
  do {
    for (std::size_t k = 0; k < K; ++k) {
      auto row = fitted.alpha(perm[k]);
      std::copy(row.begin(), row.end(), candidate.begin() + k * C);
    }
    const double score = nmse(candidate, truth_alpha);
    if (score < best_score) {
      best_score = score;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));

  AlignedNmseReport report;
  report.permutation = best;
  report.nmse_alpha = best_score;

  std::vector<double> fitted_tau(K);
  for (std::size_t k = 0; k < K; ++k) fitted_tau[k] = fitted.tau(best[k]);
  report.nmse_tau = nmse(fitted_tau, truth.tau());

  std::vector<double> fitted_pi;
  std::vector<double> truth_pi;
  for (std::size_t k = 0; k < K; ++k) {
    for (const auto& [n, p] : truth.pi(k)) {
      if (p <= 0.0) continue;
      truth_pi.push_back(p);
      fitted_pi.push_back(fitted.pi_at(best[k], n));
    }
  }
  report.nmse_pi = nmse(fitted_pi, truth_pi);
  return report;
}

}  // namespace fedmdm
