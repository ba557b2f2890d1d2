#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>
#include <sstream>
#include <vector>

#include "fedmdm/errors.hpp"
#include "fedmdm/ingestion.hpp"

using namespace fedmdm;

namespace {

RecordTable table_of(const std::vector<std::pair<std::string, std::string>>& rows) {
  RecordTable t;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    t.rows.push_back({rows[i].first.empty() ? std::nullopt : std::optional(rows[i].first),
                      rows[i].second, i});
  }
  return t;
}

BinningSpec abc() {
  BinningSpec s;
  s.vocabulary = {"a", "b", "c"};
  return s;
}

}  // namespace

TEST_CASE("income bins") {
  const BinningSpec inc = income_binning();
  CHECK(inc.categories() == 41);
  CHECK(bin_value(0.0, inc) == 0);
  CHECK(bin_value(4999.99, inc) == 0);
  CHECK(bin_value(5000.0, inc) == 1);
  CHECK(bin_value(199999.0, inc) == 39);
  CHECK(bin_value(200000.0, inc) == 40);
  CHECK(bin_value(1423000.0, inc) == 40);
  CHECK_THROWS_AS(bin_value(-0.01, inc), DomainError);
  CHECK_THROWS_AS(bin_value(std::numeric_limits<double>::quiet_NaN(), inc), DomainError);
  CHECK_THROWS_AS(bin_value(std::numeric_limits<double>::infinity(), inc), DomainError);
}

TEST_CASE("bin_value is monotone") {
  const BinningSpec inc = income_binning();
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0.0, 3e5);
  std::vector<double> xs(5000);
  for (auto& x : xs) x = u(gen);
  std::sort(xs.begin(), xs.end());
  for (std::size_t i = 1; i < xs.size(); ++i) CHECK(bin_value(xs[i - 1], inc) <= bin_value(xs[i], inc));
}

TEST_CASE("binning spec validation") {
  BinningSpec s;
  s.mode = BinningSpec::Mode::fixed_width;
  s.width = 0.0;
  s.bins = 4;
  CHECK_THROWS_AS(s.validate(), ContractError);
  s.width = 1.0;
  s.bins = 1;
  CHECK_THROWS_AS(s.validate(), ContractError);
  BinningSpec empty;
  CHECK_THROWS_AS(empty.validate(), ContractError);
}

TEST_CASE("build_clients counts rows per category") {
  const auto one = build_clients(table_of({{"u", "a"}, {"u", "a"}, {"u", "b"}}), abc());
  REQUIRE(one.size() == 1);
  CHECK(one[0].counts == std::vector<std::int64_t>{2, 1, 0});
  CHECK(one[0].n == 3);

  std::vector<std::string> ids;
  const auto two = build_clients(
      table_of({{"y", "c"}, {"x", "a"}, {"y", "c"}, {"x", "b"}, {"y", "a"}}), abc(), &ids);
  REQUIRE(two.size() == 2);
  CHECK(ids == std::vector<std::string>{"y", "x"});
  CHECK(two[0].counts == std::vector<std::int64_t>{1, 0, 2});
  CHECK(two[1].counts == std::vector<std::int64_t>{1, 1, 0});
  CHECK(two[0].n + two[1].n == 5);
}

TEST_CASE("build_clients errors") {
  CHECK_THROWS_AS(build_clients(RecordTable{}, abc()), ContractError);
  CHECK_THROWS_AS(build_clients(table_of({{"u", "a"}, {"", "b"}}), abc()), ContractError);
  try {
    build_clients(table_of({{"u", "a"}, {"u", "zebra"}}), abc());
    FAIL("expected an error");
  } catch (const ContractError& e) {
    CHECK(std::string(e.what()).find("zebra") != std::string::npos);
  }
  BinningSpec inc = income_binning();
  CHECK_THROWS_AS(categorize("lots", inc), DataError);
  CHECK(categorize("7500", inc) == 1);
}

TEST_CASE("central pool") {
  const auto single = build_central_pool(table_of({{"", "b"}}), abc());
  CHECK(single.buckets[1] == std::vector<std::size_t>{0});
  CHECK(single.buckets[0].empty());
  CHECK(single.total_rows() == 1);

  const auto inc = build_central_pool(table_of({{"", "0"}, {"", "5000"}, {"", "300000"}}),
                                      income_binning());
  CHECK(inc.categories() == 41);
  CHECK(inc.buckets[0] == std::vector<std::size_t>{0});
  CHECK(inc.buckets[1] == std::vector<std::size_t>{1});
  CHECK(inc.buckets[40] == std::vector<std::size_t>{2});
  for (std::size_t l = 2; l < 40; ++l) CHECK(inc.buckets[l].empty());
  CHECK_THROWS_AS(build_central_pool(table_of({{"", "-3"}}), income_binning()), DomainError);
}

TEST_CASE("pool marginal equals the summed client histograms") {
  std::mt19937_64 gen(5);
  std::vector<std::pair<std::string, std::string>> rows;
  for (int i = 0; i < 500; ++i) {
    rows.emplace_back("client" + std::to_string(gen() % 37),
                      std::to_string(static_cast<double>(gen() % 250000)));
  }
  const RecordTable t = table_of(rows);
  const auto pop = build_clients(t, income_binning());
  const auto pool = build_central_pool(t, income_binning());
  std::vector<std::int64_t> sum(41, 0);
  for (std::size_t i = 0; i < pop.size(); ++i) {
    for (std::size_t l = 0; l < 41; ++l) sum[l] += pop[i].counts[l];
  }
  CHECK(sum == pool.marginal);
  CHECK(pool.total_rows() == 500);
}

TEST_CASE("CSV reader") {
  std::istringstream in(
      "age,client_id,feature\n"
      "31,u1,a\n"
      "40,\"u,2\",\"b\"\n"
      "22,u1,c\n");
  const RecordTable t = read_record_csv(in);
  REQUIRE(t.rows.size() == 3);
  CHECK(t.rows[1].client_id == std::optional<std::string>("u,2"));
  CHECK(t.rows[1].feature == "b");
  CHECK(t.rows[2].row_index == 2);

  std::istringstream no_id("feature\na\nb\n");
  const RecordTable t2 = read_record_csv(no_id);
  CHECK_FALSE(t2.rows[0].client_id.has_value());

  std::istringstream missing("client_id,feature\nu1,\nu2,b\n");
  CHECK_THROWS_AS(read_record_csv(missing), DataError);
  std::istringstream no_feature("client_id,value\nu1,3\n");
  CHECK_THROWS_AS(read_record_csv(no_feature), DataError);
  std::istringstream ragged("client_id,feature\nu1\n");
  CHECK_THROWS_AS(read_record_csv(ragged), DataError);
  CHECK_THROWS_AS(read_record_csv_file("/nonexistent/file.csv"), DataError);
}
