#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>

#include "fedmdm/errors.hpp"
#include "fedmdm/io.hpp"
#include "fedmdm/presets.hpp"
#include "fedmdm/sampling.hpp"
#include "instances.hpp"

using namespace fedmdm;

TEST_CASE("doubles round-trip through text") {
  for (double x : {0.1, 1.0 / 3.0, 1e-300, 6.02214076e23, -2.5, 5e-324}) {
    CHECK(std::strtod(io::format_double(x).c_str(), nullptr) == x);
  }
  CHECK(io::format_double(std::numeric_limits<double>::quiet_NaN()) == "NaN");
  CHECK(io::format_double(-std::numeric_limits<double>::infinity()) == "-Infinity");
}

TEST_CASE("params round-trip exactly") {
  for (const auto& name : preset_names()) {
    const MdmParams p = preset(name);
    CHECK(io::params_from_json(io::params_to_json(p)) == p);
  }
  std::mt19937_64 gen(3);
  for (int i = 0; i < 10; ++i) {
    const MdmParams p = testing_support::random_params(1 + i % 4, 2 + i % 5, 3 + i, gen);
    CHECK(io::params_from_json(io::params_to_json(p)) == p);
  }
}

TEST_CASE("params JSON errors") {
  CHECK_THROWS_AS(io::params_from_json("{"), DataError);
  CHECK_THROWS_AS(io::params_from_json("{\"K\":1}"), DataError);
  const std::string bad_tau =
      R"({"K":1,"C":2,"N":3,"tau":[0.5],"alpha":[[1,1]],"pi":[[{"n":3,"p":1}]]})";
  CHECK_THROWS_AS(io::params_from_json(bad_tau), DataError);
  const std::string short_row =
      R"({"K":1,"C":2,"N":3,"tau":[1],"alpha":[[1]],"pi":[[{"n":3,"p":1}]]})";
  CHECK_THROWS_AS(io::params_from_json(short_row), DataError);
  const std::string ok =
      R"({"K":1,"C":2,"N":3,"tau":[1],"alpha":[[1,2]],"pi":[[{"n":3,"p":1}]]})";
  CHECK(io::params_from_json(ok).alpha(0)[1] == 2.0);
}

TEST_CASE("population JSONL round-trips") {
  const auto recs = gen_synthetic_federation(preset("table1:high-3"), 50, RngHandle(1));
  std::stringstream ss;
  io::write_population_jsonl(ss, recs);
  const auto back = io::read_population_jsonl(ss);
  REQUIRE(back.size() == recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(back[i].counts == recs[i].counts);
    CHECK(back[i].n == recs[i].n);
  }
  std::istringstream mismatch("{\"c\":[1,2],\"n\":4}\n");
  CHECK_THROWS_AS(io::read_population_jsonl(mismatch), DataError);
  std::istringstream garbage("{\"c\":[1,2],\"n\":3}\nnot json\n");
  CHECK_THROWS_AS(io::read_population_jsonl(garbage), DataError);
  std::istringstream empty("\n\n");
  CHECK_THROWS_AS(io::read_population_jsonl(empty), DataError);
}

TEST_CASE("binning JSON") {
  const auto cat = io::binning_from_json(R"({"mode":"categorical","vocabulary":["a","b"]})");
  CHECK(cat.categories() == 2);
  const auto fw = io::binning_from_json(R"({"mode":"fixed_width","lower":0,"width":5000,"bins":41})");
  CHECK(bin_value(200000.0, fw) == 40);
  CHECK_THROWS_AS(io::binning_from_json(R"({"mode":"fixed_width","lower":0,"width":0,"bins":4})"),
                  DataError);
  CHECK_THROWS_AS(io::binning_from_json(R"({"mode":"quantile"})"), DataError);
}

TEST_CASE("plans round-trip") {
  CentralPool pool;
  pool.buckets = {{0, 1, 2}, {3}, {4, 5}};
  pool.marginal = {3, 1, 2};
  RngHandle rng(1);
  PartitionPlan plan;
  plan.clients.push_back(fill_client(pool, {2, 3, 0}, rng));
  plan.clients.push_back(fill_client(pool, {0, 0, 2}, rng));
  std::stringstream ss;
  io::write_plan_jsonl(ss, plan);
  const auto back = io::read_plan_jsonl(ss);
  REQUIRE(back.size() == 2);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(back[i].target == plan.clients[i].target);
    CHECK(back[i].rows == plan.clients[i].rows);
    CHECK(back[i].replacement == plan.clients[i].replacement);
  }
}

TEST_CASE("matrix CSV") {
  std::ostringstream out;
  io::write_matrix_csv(out, {{0.5, 0.5}, {1.0, 0.0}}, "p");
  CHECK(out.str() == "p0,p1\n0.5,0.5\n1,0\n");
}
