#include <doctest.h>

#include <algorithm>
#include <vector>

#include "fedmdm/errors.hpp"
#include "fedmdm/model_selection.hpp"
#include "fedmdm/presets.hpp"
#include "fedmdm/sampling.hpp"

using namespace fedmdm;

namespace {

KCandidate cand(std::size_t K, double ll) {
  return {K, MdmParams({1.0}, {{1.0, 1.0}}, {{{1, 1.0}}}, 1), ll};
}

}  // namespace

TEST_CASE("choose_k takes the smallest K within tolerance of the best") {
  std::vector<KCandidate> c{cand(1, -10.0), cand(2, -9.0), cand(3, -8.995), cand(4, -8.999)};
  CHECK(choose_k(c, 1e-2) == 2);
  CHECK(choose_k(c, 1e-3) == 3);
  CHECK(choose_k(c, 0.0) == 3);
  CHECK(choose_k(c, 5.0) == 1);
  std::reverse(c.begin(), c.end());
  CHECK(choose_k(c, 1e-2) == 2);
  const std::vector<KCandidate> one{cand(4, -3.0)};
  CHECK(choose_k(one, 1e-2) == 4);
  CHECK_THROWS_AS(choose_k(std::vector<KCandidate>{}, 1e-2), ContractError);
  const std::vector<KCandidate> dead{cand(2, kLogZero), cand(1, kLogZero)};
  CHECK(choose_k(dead, 1e-2) == 1);
}

TEST_CASE("held-out validation clients are never trained on") {
  const ClientPopulation pop(gen_synthetic_federation(preset("table1:low-2"), 200, RngHandle(1)));
  InferenceConfig cfg;
  cfg.T = 5;
  cfg.init_cohort_size = 50;
  cfg.em_cohort_size = 50;
  SelectKOptions opt;
  opt.val_cohort_size = 60;
  const std::vector<std::size_t> ks{1, 2};
  const KSelectionReport rep = select_k(pop, ks, cfg, opt, RngHandle(2));
  CHECK_FALSE(rep.external_validation);
  CHECK(rep.validation_cohort.size() == 60);
  CHECK(rep.candidates.size() == 2);
  CHECK(rep.candidates[0].K == 1);
  CHECK(rep.candidates[1].K == 2);

  opt.val_cohort_size = 200;
  CHECK_THROWS_AS(select_k(pop, ks, cfg, opt, RngHandle(2)), ContractError);
  opt.val_cohort_size = 0;
  CHECK_THROWS_AS(select_k(pop, ks, cfg, opt, RngHandle(2)), ContractError);
}

TEST_CASE("select_k is deterministic and independent of candidate order and threads") {
  const ClientPopulation pop(gen_synthetic_federation(preset("table1:medium-2"), 150, RngHandle(3)));
  InferenceConfig cfg;
  cfg.T = 10;
  cfg.init_cohort_size = 150;
  cfg.em_cohort_size = 150;
  SelectKOptions opt;
  opt.val_cohort_size = 40;
  const std::vector<std::size_t> a{1, 2, 3}, b{3, 1, 2, 2};
  const auto r1 = select_k(pop, a, cfg, opt, RngHandle(4));
  cfg.execution.threads = 3;
  const auto r2 = select_k(pop, b, cfg, opt, RngHandle(4));
  CHECK(r1.chosen_K == r2.chosen_K);
  REQUIRE(r1.candidates.size() == r2.candidates.size());
  for (std::size_t i = 0; i < r1.candidates.size(); ++i) {
    CHECK(r1.candidates[i].mean_val_loglik == r2.candidates[i].mean_val_loglik);
  }
}

TEST_CASE("three-component ground truth selects K = 3") {
  const MdmParams truth = preset("appendixA");
  const ClientPopulation pop(gen_synthetic_federation(truth, 1000, RngHandle(7)));
  const ClientPopulation val(gen_synthetic_federation(truth, 1000, RngHandle(7).split(1)));
  InferenceConfig cfg;
  cfg.T = 100;
  cfg.init_cohort_size = 1000;
  cfg.em_cohort_size = 1000;
  cfg.execution.threads = 4;
  SelectKOptions opt;
  opt.val_cohort_size = 1000;
  opt.validation_pop = &val;
  const std::vector<std::size_t> ks{1, 2, 3, 4, 5, 6};
  const auto rep = select_k(pop, ks, cfg, opt, RngHandle(8));
  CHECK(rep.external_validation);
  CHECK(rep.chosen_K == 3);
  // Adding components beyond the truth gains little on held-out data.
  for (const auto& c : rep.candidates) {
    if (c.K > 3) CHECK(c.mean_val_loglik <= rep.candidates[2].mean_val_loglik + 0.05);
  }
}
