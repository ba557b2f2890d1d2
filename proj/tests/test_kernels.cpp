#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "fedmdm/errors.hpp"
#include "fedmdm/kernels.hpp"
#include "fedmdm/special_fn.hpp"
#include "oracles.hpp"

namespace kn = fedmdm::kernels;

#if defined(FEDMDM_NEON_EMULATION)
namespace fedmdm::kernels {
const KernelTable& neon_table();
}
#endif

namespace {

struct Case {
  std::vector<double> counts;
  std::vector<double> alpha;
};

std::vector<Case> random_cases(unsigned seed, int how_many) {
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<int> len_dist(0, 37);
  std::uniform_real_distribution<double> log_alpha(-8.0, 3.0);
  std::uniform_int_distribution<int> count_scale(0, 6);
  std::vector<Case> cases;
  for (int i = 0; i < how_many; ++i) {
    Case c;
    const int len = len_dist(gen);
    for (int j = 0; j < len; ++j) {
      c.alpha.push_back(std::pow(10.0, log_alpha(gen)));
      const int scale = count_scale(gen);
      const double cnt =
          scale == 0 ? 0.0 : std::floor(std::pow(10.0, std::uniform_real_distribution<double>(0, scale)(gen)));
      c.counts.push_back(cnt);
    }
    cases.push_back(std::move(c));
  }
  return cases;
}

// Direct evaluation of the summed DM terms with the scalar special functions.
double dm_terms_reference(const Case& c) {
  double s = 0.0;
  for (std::size_t j = 0; j < c.counts.size(); ++j) {
    if (c.counts[j] == 0.0) continue;
    s += fedmdm::special_fn::log_gamma(c.counts[j] + c.alpha[j]) -
         fedmdm::special_fn::log_gamma(c.alpha[j]) -
         fedmdm::special_fn::log_gamma(c.counts[j] + 1.0);
  }
  return s;
}

double dm_terms_scale(const Case& c) {
  double s = 1.0;
  for (std::size_t j = 0; j < c.counts.size(); ++j) {
    if (c.counts[j] == 0.0) continue;
    s += std::abs(fedmdm::special_fn::log_gamma(c.counts[j] + c.alpha[j])) +
         std::abs(fedmdm::special_fn::log_gamma(c.alpha[j])) +
         std::abs(fedmdm::special_fn::log_gamma(c.counts[j] + 1.0));
  }
  return s;
}

std::vector<const kn::KernelTable*> available_tables() {
  std::vector<const kn::KernelTable*> out{&kn::scalar_table()};
  if (const auto* t = kn::table_for(kn::Isa::avx2)) out.push_back(t);
  if (const auto* t = kn::table_for(kn::Isa::neon)) out.push_back(t);
#if defined(FEDMDM_NEON_EMULATION)
  out.push_back(&kn::neon_table());
#endif
  return out;
}

}  // namespace

TEST_CASE("scalar table is always available and named") {
  CHECK(kn::table_for(kn::Isa::scalar) == &kn::scalar_table());
  CHECK(kn::isa_name(kn::Isa::scalar) == "scalar");
  CHECK(kn::parse_isa("avx2") == kn::Isa::avx2);
  CHECK_FALSE(kn::parse_isa("sse9").has_value());
  CHECK(kn::select(kn::Isa::scalar));
  CHECK(kn::active().isa == kn::Isa::scalar);
  CHECK(kn::select(kn::best_available()));
  CHECK(kn::active().isa == kn::best_available());
}

TEST_CASE("span front-ends reject mismatched lengths") {
  std::vector<double> a(3, 1.0), b(4, 1.0);
  CHECK_THROWS_AS(kn::dm_log_terms(a, b), fedmdm::ContractError);
  CHECK_THROWS_AS(kn::digamma_diff_axpy(a, a, 1.0, b), fedmdm::ContractError);
  CHECK_THROWS_AS(kn::accumulate(b, a), fedmdm::ContractError);
}

TEST_CASE("every variant matches the direct special-function evaluation") {
  for (const auto* t : available_tables()) {
    INFO("isa = " << kn::isa_name(t->isa));
    for (const auto& c : random_cases(11, 400)) {
      const double got = t->dm_log_terms(c.counts.data(), c.alpha.data(), c.counts.size());
      CHECK(std::abs(got - dm_terms_reference(c)) <= 1e-13 * dm_terms_scale(c));
    }
  }
}

TEST_CASE("digamma_diff_axpy variants agree and skip zero counts") {
  for (const auto* t : available_tables()) {
    INFO("isa = " << kn::isa_name(t->isa));
    for (const auto& c : random_cases(12, 400)) {
      std::vector<double> out(c.counts.size(), 0.25), ref(c.counts.size(), 0.25);
      const double w = 0.7;
      t->digamma_diff_axpy(c.counts.data(), c.alpha.data(), w, out.data(), out.size());
      for (std::size_t j = 0; j < ref.size(); ++j) {
        if (c.counts[j] == 0.0) continue;
        ref[j] += w * (fedmdm::special_fn::digamma(c.counts[j] + c.alpha[j]) -
                       fedmdm::special_fn::digamma(c.alpha[j]));
      }
      for (std::size_t j = 0; j < ref.size(); ++j) {
        if (c.counts[j] == 0.0) {
          CHECK(out[j] == 0.25);
        } else {
          CHECK(std::abs(out[j] - ref[j]) <= 1e-12 * (1.0 + std::abs(ref[j]) + 1.0 / c.alpha[j]));
        }
      }
    }
  }
}

TEST_CASE("accumulate is an exact element-wise add in every variant") {
  std::mt19937_64 gen(3);
  std::normal_distribution<double> nd;
  for (const auto* t : available_tables()) {
    for (std::size_t len : {0u, 1u, 3u, 4u, 5u, 17u, 64u}) {
      std::vector<double> dst(len), src(len);
      for (auto& v : dst) v = nd(gen);
      for (auto& v : src) v = nd(gen);
      auto expect = dst;
      for (std::size_t j = 0; j < len; ++j) expect[j] += src[j];
      t->accumulate(dst.data(), src.data(), len);
      CHECK(dst == expect);
    }
  }
}

TEST_CASE("batch special functions meet the scalar accuracy contract") {
  std::vector<double> xs;
  for (int i = 0; i <= 1403; ++i) xs.push_back(std::pow(10.0, -6.0 + 14.0 * i / 1403.0));
  for (double c : {1.0, 2.0, 3.0, 0.5}) {
    for (double d = 1e-12; d < 0.5; d *= 3.7) {
      xs.push_back(c + d);
      xs.push_back(c - d);
    }
  }
  for (const auto* t : available_tables()) {
    INFO("isa = " << kn::isa_name(t->isa));
    std::vector<double> lg(xs.size()), dg(xs.size());
    t->log_gamma_batch(xs.data(), lg.data(), xs.size());
    t->digamma_batch(xs.data(), dg.data(), xs.size());
    double lg_worst = 0.0, dg_worst = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const double ref = oracle::lgamma_ref(xs[i]);
      lg_worst = std::max(lg_worst, std::abs(lg[i] - ref) / std::max(std::abs(ref), 1e-300));
      dg_worst = std::max(dg_worst, std::abs(dg[i] - oracle::digamma_ref(xs[i])));
    }
    CHECK(lg_worst <= 1e-12);
    CHECK(dg_worst <= 1e-10);
  }
}
