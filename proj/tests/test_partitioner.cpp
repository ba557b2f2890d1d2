#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "fedmdm/errors.hpp"
#include "fedmdm/partitioner.hpp"
#include "fedmdm/presets.hpp"

using namespace fedmdm;

namespace {

// Pool with `per_bucket` rows in each of C categories.
CentralPool uniform_pool(std::size_t C, std::size_t per_bucket) {
  CentralPool pool;
  pool.buckets.resize(C);
  pool.marginal.assign(C, static_cast<std::int64_t>(per_bucket));
  std::size_t row = 0;
  for (auto& b : pool.buckets) {
    for (std::size_t i = 0; i < per_bucket; ++i) b.push_back(row++);
  }
  return pool;
}

std::size_t category_of(const CentralPool& pool, std::size_t row) {
  for (std::size_t l = 0; l < pool.categories(); ++l) {
    if (std::count(pool.buckets[l].begin(), pool.buckets[l].end(), row)) return l;
  }
  FAIL("row not in pool");
  return 0;
}

// Realized per-category counts of a client, read back from the pool.
void check_fidelity(const CentralPool& pool, const SimulatedClient& c) {
  std::vector<std::int64_t> realized(pool.categories(), 0);
  for (const auto& [l, rows] : c.rows) {
    for (std::size_t r : rows) {
      CHECK(category_of(pool, r) == l);
      ++realized[l];
    }
    const bool repl = c.replacement.count(l) && c.replacement.at(l);
    if (!repl) CHECK(std::set<std::size_t>(rows.begin(), rows.end()).size() == rows.size());
  }
  CHECK(realized == c.target);
}

}  // namespace

TEST_CASE("fill_client honours the target and the replacement policy") {
  const CentralPool pool = uniform_pool(3, 4);
  RngHandle rng(1);
  const SimulatedClient a = fill_client(pool, {2, 0, 1}, rng);
  check_fidelity(pool, a);
  CHECK(a.rows.size() == 2);
  CHECK(a.n() == 3);
  CHECK(a.replacement.at(0) == false);

  const SimulatedClient b = fill_client(pool, {0, 9, 4}, rng);
  check_fidelity(pool, b);
  CHECK(b.replacement.at(1) == true);
  CHECK(b.replacement.at(2) == false);

  CentralPool holes = uniform_pool(3, 2);
  holes.buckets[1].clear();
  holes.marginal[1] = 0;
  try {
    fill_client(holes, {1, 1, 0}, rng);
    FAIL("expected a partition error");
  } catch (const PartitionError& e) {
    CHECK(std::string(e.what()).find('1') != std::string::npos);
  }
}

TEST_CASE("MDM partitions: fidelity, determinism and the low-heterogeneity mean") {
  const MdmParams params = preset("table1:low-1");
  const CentralPool pool = uniform_pool(params.C(), 100);
  const PartitionPlan plan = partition_mdm(pool, params, 1000, RngHandle(3));
  CHECK(plan.generator == PartitionGenerator::mdm);
  CHECK(plan.clients.size() == 1000);
  std::vector<double> mean(params.C(), 0.0);
  for (std::size_t i = 0; i < plan.clients.size(); ++i) {
    if (i < 50) check_fidelity(pool, plan.clients[i]);
    for (std::size_t l = 0; l < params.C(); ++l) {
      mean[l] += static_cast<double>(plan.clients[i].target[l]) /
                 static_cast<double>(plan.clients[i].n()) / 1000.0;
    }
  }
  for (double m : mean) CHECK(std::abs(m - 1.0 / static_cast<double>(params.C())) <= 0.02);

  const PartitionPlan again = partition_mdm(pool, params, 1000, RngHandle(3));
  for (std::size_t i = 0; i < 1000; ++i) {
    CHECK(again.clients[i].target == plan.clients[i].target);
    CHECK(again.clients[i].rows == plan.clients[i].rows);
  }

  // A prefix of a larger plan is the smaller plan.
  const PartitionPlan small = partition_mdm(pool, params, 10, RngHandle(3));
  for (std::size_t i = 0; i < 10; ++i) CHECK(small.clients[i].rows == plan.clients[i].rows);

  CHECK_THROWS_AS(partition_mdm(uniform_pool(3, 5), params, 1, RngHandle(1)), ContractError);
}

TEST_CASE("a point-mass model gives every client the same histogram") {
  const MdmParams point({1.0}, {{1e-300, 1.0, 1e-300}}, {{{8, 1.0}}}, 8);
  const CentralPool pool = uniform_pool(3, 20);
  const PartitionPlan plan = partition_mdm(pool, point, 50, RngHandle(4));
  for (const auto& c : plan.clients) CHECK(c.target == std::vector<std::int64_t>{0, 8, 0});
}

TEST_CASE("fully IID partitions") {
  CentralPool pool = uniform_pool(2, 500);
  const PartitionPlan one = partition_fully_iid(pool, {{5, 1.0}}, 1, RngHandle(1));
  REQUIRE(one.clients.size() == 1);
  check_fidelity(pool, one.clients[0]);
  std::set<std::size_t> rows;
  for (const auto& [l, r] : one.clients[0].rows) rows.insert(r.begin(), r.end());
  CHECK(rows.size() == 5);

  const PartitionPlan plan = partition_fully_iid(pool, {{100, 1.0}}, 1000, RngHandle(2));
  std::vector<double> mean(2, 0.0);
  for (const auto& c : plan.clients) {
    CHECK(c.n() == 100);
    for (std::size_t l = 0; l < 2; ++l) mean[l] += static_cast<double>(c.target[l]) / 1000.0;
  }
  CHECK(std::abs(mean[0] / 100.0 - 0.5) <= 0.01);
  CHECK(std::abs(mean[1] / 100.0 - 0.5) <= 0.01);

  CHECK_THROWS_AS(partition_fully_iid(pool, {{1001, 1.0}}, 1, RngHandle(1)), PartitionError);
}

TEST_CASE("conditionally IID partitions reproduce every true client") {
  const MdmParams params = preset("table1:high-2");
  const ClientPopulation truth(gen_synthetic_federation(params, 300, RngHandle(6)));
  const CentralPool pool = uniform_pool(params.C(), 30);
  const PartitionPlan plan = partition_conditionally_iid(pool, truth, RngHandle(7));
  REQUIRE(plan.clients.size() == truth.size());
  std::vector<std::int64_t> agg_sim(params.C(), 0), agg_true(params.C(), 0);
  for (std::size_t i = 0; i < truth.size(); ++i) {
    check_fidelity(pool, plan.clients[i]);
    CHECK(plan.clients[i].target == truth[i].counts);
    CHECK(plan.clients[i].n() == truth[i].n);
    for (std::size_t l = 0; l < params.C(); ++l) {
      agg_sim[l] += plan.clients[i].target[l];
      agg_true[l] += truth[i].counts[l];
    }
  }
  CHECK(agg_sim == agg_true);
}

TEST_CASE("empirical count distribution and histogram export") {
  const ClientPopulation pop({{{2, 2}, 4}, {{1, 0}, 1}, {{0, 4}, 4}});
  const SampleCountDist d = empirical_count_distribution(pop);
  CHECK(d.at(4) == doctest::Approx(2.0 / 3.0));
  CHECK(d.at(1) == doctest::Approx(1.0 / 3.0));
  const auto rows = export_histograms(pop);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0] == std::vector<double>{0.5, 0.5});
  CHECK(rows[1] == std::vector<double>{1.0, 0.0});

  const auto plan = partition_mdm(uniform_pool(10, 5), preset("table1:medium-1"), 0, RngHandle(1));
  CHECK(plan.clients.empty());
  const CentralPool pool = uniform_pool(4, 50);
  const MdmParams small({1.0}, {{1, 2, 3, 4}}, {{{10, 1.0}}}, 10);
  for (const auto& r : export_histograms(partition_mdm(pool, small, 40, RngHandle(2)))) {
    double s = 0.0;
    for (double v : r) s += v;
    CHECK(s == doctest::Approx(1.0).epsilon(1e-15));
  }
}
