#pragma once

// Choosing the number of mixture components by held-out validation log
// likelihood.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "fedmdm/federation.hpp"
#include "fedmdm/inference.hpp"
#include "fedmdm/mdm_model.hpp"

namespace fedmdm {

inline constexpr double kDefaultTieTolerance = 1e-2;

struct KCandidate {
  std::size_t K = 0;
  MdmParams params;
  /// Mean per-client log_mdm_pmf over the validation cohort.
  double mean_val_loglik = 0.0;
};

struct KSelectionReport {
  std::vector<KCandidate> candidates;  // ascending K
  std::size_t chosen_K = 0;
  double tie_tolerance = kDefaultTieTolerance;
  /// Validation cohort indices, into the validation population when one was
  /// supplied and into the training population otherwise.
  std::vector<std::size_t> validation_cohort;
  bool external_validation = false;
};

struct SelectKOptions {
  std::size_t val_cohort_size = 0;
  double tie_tolerance = kDefaultTieTolerance;
  /// Clients drawn from elsewhere (e.g. fresh synthetic draws). When absent
  /// the validation cohort is reserved from `pop` before any training and
  /// training runs on the remaining clients only.
  const ClientPopulation* validation_pop = nullptr;
};

/// Smallest K whose mean validation log likelihood is within `tolerance`
/// of the best one. `candidates` must be non-empty.
std::size_t choose_k(std::span<const KCandidate> candidates, double tolerance);

/// Fits every candidate K (independent RNG streams keyed by K), evaluates
/// each on one validation cohort the fits never saw, and applies choose_k.
/// cfg.K is ignored; cohort sizes are clamped to the training population.
KSelectionReport select_k(const ClientPopulation& pop,
                          std::span<const std::size_t> candidate_ks,
                          const InferenceConfig& cfg,
                          const SelectKOptions& options, const RngHandle& rng);

}  // namespace fedmdm
