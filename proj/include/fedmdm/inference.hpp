#pragma once

// Federated generalized-EM maximum likelihood for MDM parameters.
//
// The protocol is split into client-side packet builders and server-side
// updates. Server updates take an AggregateReport and nothing else, so no
// server code path can see an individual client's statistics.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "fedmdm/federation.hpp"
#include "fedmdm/mdm_model.hpp"
#include "fedmdm/sampling.hpp"

namespace fedmdm {

enum class DegeneratePolicy { skip, error };

inline constexpr double kDefaultAlphaFloor = 1e-8;
/// Aggregate omega_k below this fraction of the contributor count marks a
/// dead component for the round.
inline constexpr double kDeadComponentFraction = 1e-12;
inline constexpr int kInitMaxAttempts = 10;

struct InferenceConfig {
  std::size_t K = 1;
  std::size_t T = 100;
  std::size_t init_cohort_size = 0;
  std::size_t em_cohort_size = 0;
  double alpha_floor = kDefaultAlphaFloor;
  DegeneratePolicy degenerate_policy = DegeneratePolicy::skip;
  /// Evaluate the full-population log likelihood after every round.
  bool trace_log_likelihood = false;
  /// Stop once the traced log likelihood improves by less than
  /// early_stop_tolerance per round for early_stop_window rounds.
  /// Requires trace_log_likelihood.
  bool early_stop = false;
  double early_stop_tolerance = 1e-6;
  std::size_t early_stop_window = 5;
  ExecutionPolicy execution;

  /// Throws ContractError unless K >= 1 and both cohort sizes >= K.
  void validate() const;
};

struct InferenceTrace {
  /// Parameters after initialization and after each EM round.
  std::vector<MdmParams> snapshots;
  /// Parallel to snapshots when log likelihood tracing is enabled.
  std::vector<double> log_likelihood;
  /// Sorted, de-duplicated indices of every client that joined a cohort.
  std::vector<std::size_t> clients_seen;
  bool stopped_early = false;
};

struct FitResult {
  MdmParams params;
  InferenceTrace trace;
};

// ---- client side --------------------------------------------------------

InitPacket client_init_packet(const ClientRecord& rec, std::size_t K,
                              std::size_t chosen_component);

/// omega, E column n_i, u and v for one client. A degenerate client yields a
/// zero packet under DegeneratePolicy::skip and throws otherwise.
EmPacket client_em_packet(const ClientRecord& rec,
                          std::span<const double> counts_f64,
                          const MdmParams& params, DegeneratePolicy policy);

// ---- server side --------------------------------------------------------

/// Moment-matching initialization from aggregated init statistics. Returns
/// nullopt when some component received no clients (m_k == 0).
std::optional<MdmParams> server_init_update(const AggregateReport& report,
                                            std::int64_t N, double alpha_floor);

/// One generalized-EM parameter update from aggregated EM statistics.
MdmParams server_em_update(const MdmParams& current,
                           const AggregateReport& report, double alpha_floor);

// ---- protocol -----------------------------------------------------------

MdmParams init_params(const ClientPopulation& pop, const InferenceConfig& cfg,
                      const RngHandle& rng,
                      std::vector<std::size_t>* cohort_out = nullptr);

MdmParams em_round(const ClientPopulation& pop, const MdmParams& params,
                   const InferenceConfig& cfg, RngHandle& rng,
                   std::vector<std::size_t>* cohort_out = nullptr);

/// init_params, then cfg.T rounds of em_round. Round streams are derived
/// from `rng` so results do not depend on execution policy.
FitResult fit(const ClientPopulation& pop, const InferenceConfig& cfg,
              const RngHandle& rng);

/// Full-population log likelihood computed as a sum of per-client log pmf
/// contributions in client order.
double population_log_likelihood(const ClientPopulation& pop,
                                 const MdmParams& params,
                                 const ExecutionPolicy& policy = {});

/// Reference full-batch update over every record, written directly from the
/// closed-form generalized-EM rules. Used as the oracle for em_round.
MdmParams full_batch_update(std::span<const ClientRecord> records,
                            const MdmParams& params,
                            double alpha_floor = kDefaultAlphaFloor,
                            DegeneratePolicy policy = DegeneratePolicy::skip);

}  // namespace fedmdm
