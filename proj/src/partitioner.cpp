#include "fedmdm/partitioner.hpp"

#include <algorithm>
#include <numeric>
#include <string>
#include <unordered_set>

#include "fedmdm/errors.hpp"

namespace fedmdm {
namespace {

// Floyd's algorithm: k distinct values from [0, m), returned sorted.
std::vector<std::size_t> distinct_positions(std::size_t m, std::size_t k,
                                            RngHandle& rng) {
  std::unordered_set<std::size_t> chosen;
  chosen.reserve(k * 2);
  std::vector<std::size_t> out;
  out.reserve(k);
  for (std::size_t j = m - k; j < m; ++j) {
    const auto t = static_cast<std::size_t>(rng.uniform_index(j + 1));
    const std::size_t pick = chosen.insert(t).second ? t : j;
    if (pick == j) chosen.insert(j);
    out.push_back(pick);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

std::string_view generator_name(PartitionGenerator g) {
  switch (g) {
    case PartitionGenerator::mdm: return "mdm";
    case PartitionGenerator::fully_iid: return "fully_iid";
    case PartitionGenerator::conditionally_iid: return "conditionally_iid";
  }
  return "unknown";
}

std::int64_t SimulatedClient::n() const {
  return std::accumulate(target.begin(), target.end(), std::int64_t{0});
}

SimulatedClient fill_client(const CentralPool& pool,
                            std::vector<std::int64_t> target, RngHandle& rng) {
  if (target.size() != pool.categories()) {
    throw ContractError("target histogram has " + std::to_string(target.size()) +
                        " categories, pool has " +
                        std::to_string(pool.categories()));
  }
  SimulatedClient client;
  for (std::size_t l = 0; l < target.size(); ++l) {
    const std::int64_t want = target[l];
    if (want <= 0) continue;
    const auto& bucket = pool.buckets[l];
    if (bucket.empty()) {
      throw PartitionError("category " + std::to_string(l) +
                           " is needed but has no rows in the pool");
    }
    const auto count = static_cast<std::size_t>(want);
    std::vector<std::size_t> rows;
    rows.reserve(count);
    const bool with_replacement = bucket.size() < count;
    if (with_replacement) {
      for (std::size_t r = 0; r < count; ++r) {
        rows.push_back(bucket[rng.uniform_index(bucket.size())]);
      }
    } else {
      for (std::size_t pos : distinct_positions(bucket.size(), count, rng)) {
        rows.push_back(bucket[pos]);
      }
    }
    client.rows.emplace(l, std::move(rows));
    client.replacement.emplace(l, with_replacement);
  }
  client.target = std::move(target);
  return client;
}

PartitionPlan partition_mdm(const CentralPool& pool, const MdmParams& params,
                            std::size_t num_clients, const RngHandle& rng) {
  if (params.C() != pool.categories()) {
    throw ContractError("model has " + std::to_string(params.C()) +
                        " categories, pool has " + std::to_string(pool.categories()));
  }
  PartitionPlan plan;
  plan.generator = PartitionGenerator::mdm;
  plan.seed = rng.seed();
  plan.clients.reserve(num_clients);
  for (std::size_t i = 0; i < num_clients; ++i) {
    RngHandle client_rng = rng.split(i);
    LabeledClient drawn = sample_client(params, client_rng);
    plan.clients.push_back(fill_client(pool, std::move(drawn.record.counts), client_rng));
  }
  return plan;
}

PartitionPlan partition_fully_iid(const CentralPool& pool,
                                  const SampleCountDist& n_distribution,
                                  std::size_t num_clients, const RngHandle& rng) {
  const std::size_t total = pool.total_rows();
  if (total == 0) throw ContractError("partition_fully_iid: empty pool");

  // Global position p maps to (category, offset) through bucket prefix sums.
  std::vector<std::size_t> offsets(pool.categories() + 1, 0);
  for (std::size_t l = 0; l < pool.categories(); ++l) {
    offsets[l + 1] = offsets[l] + pool.buckets[l].size();
  }

  PartitionPlan plan;
  plan.generator = PartitionGenerator::fully_iid;
  plan.seed = rng.seed();
  plan.clients.reserve(num_clients);
  for (std::size_t i = 0; i < num_clients; ++i) {
    RngHandle client_rng = rng.split(i);
    const std::int64_t n = sample_count(n_distribution, client_rng);
    if (n < 0 || static_cast<std::size_t>(n) > total) {
      throw PartitionError("sampled n = " + std::to_string(n) +
                           " exceeds the pool size " + std::to_string(total));
    }
    SimulatedClient client;
    client.target.assign(pool.categories(), 0);
    for (std::size_t pos : distinct_positions(total, static_cast<std::size_t>(n),
                                              client_rng)) {
      const auto it = std::upper_bound(offsets.begin(), offsets.end(), pos);
      const auto l = static_cast<std::size_t>(it - offsets.begin()) - 1;
      client.rows[l].push_back(pool.buckets[l][pos - offsets[l]]);
      ++client.target[l];
    }
    for (const auto& [l, rows] : client.rows) client.replacement[l] = false;
    plan.clients.push_back(std::move(client));
  }
  return plan;
}

PartitionPlan partition_conditionally_iid(const CentralPool& pool,
                                          const ClientPopulation& true_pop,
                                          const RngHandle& rng) {
  PartitionPlan plan;
  plan.generator = PartitionGenerator::conditionally_iid;
  plan.seed = rng.seed();
  plan.clients.reserve(true_pop.size());
  for (std::size_t i = 0; i < true_pop.size(); ++i) {
    RngHandle client_rng = rng.split(i);
    plan.clients.push_back(fill_client(pool, true_pop[i].counts, client_rng));
  }
  return plan;
}

SampleCountDist empirical_count_distribution(const ClientPopulation& pop) {
  std::map<std::int64_t, std::size_t> tally;
  for (const auto& rec : pop.records()) ++tally[rec.n];
  SampleCountDist dist;
  for (const auto& [n, count] : tally) {
    dist[n] = static_cast<double>(count) / static_cast<double>(pop.size());
  }
  return dist;
}

namespace {

std::vector<double> normalized(std::span<const std::int64_t> counts) {
  const double n = static_cast<double>(
      std::accumulate(counts.begin(), counts.end(), std::int64_t{0}));
  std::vector<double> row(counts.size(), 0.0);
  if (n > 0.0) {
    for (std::size_t j = 0; j < counts.size(); ++j) {
      row[j] = static_cast<double>(counts[j]) / n;
    }
  }
  return row;
}

}  // namespace

std::vector<std::vector<double>> export_histograms(const PartitionPlan& plan) {
  std::vector<std::vector<double>> out;
  out.reserve(plan.clients.size());
  for (const auto& c : plan.clients) out.push_back(normalized(c.target));
  return out;
}

std::vector<std::vector<double>> export_histograms(const ClientPopulation& pop) {
  std::vector<std::vector<double>> out;
  out.reserve(pop.size());
  for (const auto& rec : pop.records()) out.push_back(normalized(rec.counts));
  return out;
}

}  // namespace fedmdm
