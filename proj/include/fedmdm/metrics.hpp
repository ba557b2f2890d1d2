#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "fedmdm/mdm_model.hpp"

namespace fedmdm {

/// sqrt(sum_j ((x_j - y_j) / y_j)^2). Throws DomainError on a zero y entry
/// and ContractError on a length mismatch.
double nmse(std::span<const double> x, std::span<const double> y);

inline constexpr std::size_t kMaxAlignK = 8;

struct AlignedNmseReport {
  /// fitted component permutation[k] is matched to truth component k.
  std::vector<std::size_t> permutation;
  double nmse_tau = 0.0;
  double nmse_alpha = 0.0;
  double nmse_pi = 0.0;
};

/// Resolves label switching by exhaustive search over component
/// permutations (K <= 8) minimizing nmse on the flattened alpha matrix, then
/// scores tau, alpha and pi under the chosen permutation. pi is compared on
/// the ground truth's positive-probability support, with fitted entries
/// absent from the fitted support read as 0.
AlignedNmseReport align_and_score(const MdmParams& fitted,
                                  const MdmParams& truth);

}  // namespace fedmdm
