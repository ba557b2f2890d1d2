#pragma once

// Simulated federation: client population, cohort sampling, and the secure
// aggregation boundary. Server-side code only ever receives an
// AggregateReport, the element-wise sum of a cohort's packets.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "fedmdm/mdm_model.hpp"
#include "fedmdm/sampling.hpp"

namespace fedmdm {

class ClientPopulation {
 public:
  /// Validates every record and that all share one category count.
  explicit ClientPopulation(std::vector<ClientRecord> clients);

  std::size_t size() const { return clients_.size(); }
  std::size_t C() const { return C_; }
  std::int64_t max_n() const { return max_n_; }

  const ClientRecord& operator[](std::size_t i) const { return clients_[i]; }
  const std::vector<ClientRecord>& records() const { return clients_; }

  /// Counts of client i as doubles, for the batched kernels.
  std::span<const double> counts_f64(std::size_t i) const {
    return {counts_f64_.data() + i * C_, C_};
  }

 private:
  std::vector<ClientRecord> clients_;
  std::vector<double> counts_f64_;
  std::size_t C_ = 0;
  std::int64_t max_n_ = 0;
};

/// Columns of a K x N matrix keyed by sample count n; each value has K rows.
using SparseColumns = std::map<std::int64_t, std::vector<double>>;

/// Initialization-round statistics: E one-hot at (k_i, n_i), P and Q rows
/// k_i hold the normalized histogram and its element-wise square.
struct InitPacket {
  std::size_t K = 0;
  std::size_t C = 0;
  SparseColumns E;
  std::vector<double> P;  // K x C row-major
  std::vector<double> Q;  // K x C row-major
};

/// EM-round statistics. `participation` is 1 for a contributing client and
/// 0 for a skipped degenerate client, so the aggregate counts contributors.
struct EmPacket {
  std::size_t K = 0;
  std::size_t C = 0;
  std::vector<double> omega;  // K
  SparseColumns E;
  std::vector<double> u;  // K x C row-major
  std::vector<double> v;  // K
  double participation = 1.0;
};

using ClientStatsPacket = std::variant<InitPacket, EmPacket>;

/// Element-wise sum of a cohort's packets.
struct AggregateReport {
  ClientStatsPacket sum;
  std::size_t cohort_size = 0;

  const InitPacket& init() const;
  const EmPacket& em() const;
};

InitPacket make_zero_init_packet(std::size_t K, std::size_t C);
EmPacket make_zero_em_packet(std::size_t K, std::size_t C);

/// Streaming secure-sum: absorbs packets one at a time and releases only the
/// total. Throws ContractError on variant or dimension mismatch.
class SecureAggregator {
 public:
  void add(const ClientStatsPacket& packet);
  void merge(const SecureAggregator& other);
  std::size_t count() const { return count_; }
  /// Throws ContractError when nothing was added.
  AggregateReport report() const;

 private:
  std::optional<ClientStatsPacket> sum_;
  std::size_t count_ = 0;
};

/// Deterministic element-wise sum in the given order.
AggregateReport secure_sum(std::span<const ClientStatsPacket> packets);

/// Uniform sample of `cohort_size` distinct indices from [0, M), sorted.
std::vector<std::size_t> sample_cohort(const ClientPopulation& pop,
                                       std::size_t cohort_size,
                                       RngHandle& rng);

/// Uniform sample without replacement from `eligible`, sorted ascending.
std::vector<std::size_t> sample_cohort_from(std::span<const std::size_t> eligible,
                                            std::size_t cohort_size,
                                            RngHandle& rng);

struct ExecutionPolicy {
  std::size_t threads = 1;
  /// Sum packets in ascending cohort order (bit-reproducible). Otherwise each
  /// worker pre-aggregates its share and partial sums are merged.
  bool deterministic = true;
};

/// Runs `client_fn` for every cohort member (possibly in parallel) and
/// returns only the aggregate of the produced packets.
AggregateReport run_cohort_round(
    std::span<const std::size_t> cohort,
    const std::function<ClientStatsPacket(std::size_t)>& client_fn,
    const ExecutionPolicy& policy);

}  // namespace fedmdm
