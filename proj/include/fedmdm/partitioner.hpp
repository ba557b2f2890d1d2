#pragma once

// Splitting a central pool into simulated clients.

#include <cstddef>
#include <cstdint>
#include <map>
#include <string_view>
#include <vector>

#include "fedmdm/federation.hpp"
#include "fedmdm/ingestion.hpp"
#include "fedmdm/mdm_model.hpp"
#include "fedmdm/sampling.hpp"

namespace fedmdm {

enum class PartitionGenerator { mdm, fully_iid, conditionally_iid };

std::string_view generator_name(PartitionGenerator g);

struct SimulatedClient {
  std::vector<std::int64_t> target;
  /// Pool row indices per category with a positive target count.
  std::map<std::size_t, std::vector<std::size_t>> rows;
  /// Set when the bucket was smaller than the target count and rows were
  /// drawn with replacement.
  std::map<std::size_t, bool> replacement;

  std::int64_t n() const;
};

struct PartitionPlan {
  std::vector<SimulatedClient> clients;
  PartitionGenerator generator = PartitionGenerator::mdm;
  std::uint64_t seed = 0;
};

/// Rows for one target histogram: without replacement within the client,
/// falling back to replacement (and flagging it) when a bucket is too small.
/// Throws PartitionError when a needed bucket is empty.
SimulatedClient fill_client(const CentralPool& pool,
                            std::vector<std::int64_t> target, RngHandle& rng);

/// Histograms drawn from the learned MDM; client i uses rng.split(i).
PartitionPlan partition_mdm(const CentralPool& pool, const MdmParams& params,
                            std::size_t num_clients, const RngHandle& rng);

/// n from `n_distribution`, then n distinct rows uniformly from the pool.
PartitionPlan partition_fully_iid(const CentralPool& pool,
                                  const SampleCountDist& n_distribution,
                                  std::size_t num_clients, const RngHandle& rng);

/// One simulated client per true client reproducing its histogram exactly.
/// Needs every true client's histogram, so it is an evaluation oracle only.
PartitionPlan partition_conditionally_iid(const CentralPool& pool,
                                          const ClientPopulation& true_pop,
                                          const RngHandle& rng);

/// Empirical sample-count distribution of a population.
SampleCountDist empirical_count_distribution(const ClientPopulation& pop);

/// Rows c / n, one per client.
std::vector<std::vector<double>> export_histograms(const PartitionPlan& plan);
std::vector<std::vector<double>> export_histograms(const ClientPopulation& pop);

}  // namespace fedmdm
