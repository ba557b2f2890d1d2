#include "fedmdm/sampling.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "fedmdm/errors.hpp"

namespace fedmdm {
namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

void mulhilo32(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
               std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

}  // namespace

namespace detail {

std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                           std::array<std::uint32_t, 2> key) {
  constexpr std::uint32_t kMul0 = 0xD2511F53;
  constexpr std::uint32_t kMul1 = 0xCD9E8D57;
  constexpr std::uint32_t kWeyl0 = 0x9E3779B9;
  constexpr std::uint32_t kWeyl1 = 0xBB67AE85;
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo32(kMul0, ctr[0], hi0, lo0);
    mulhilo32(kMul1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kWeyl0;
    key[1] += kWeyl1;
  }
  return ctr;
}

}  // namespace detail

RngHandle::RngHandle(std::uint64_t seed, std::uint64_t stream)
    : seed_(seed), stream_(stream) {}

RngHandle RngHandle::split(std::uint64_t sub) const {
  return RngHandle(seed_, splitmix64(stream_ ^ splitmix64(sub)));
}

void RngHandle::refill() {
  const std::array<std::uint32_t, 4> ctr = {
      static_cast<std::uint32_t>(counter_),
      static_cast<std::uint32_t>(counter_ >> 32),
      static_cast<std::uint32_t>(stream_),
      static_cast<std::uint32_t>(stream_ >> 32)};
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed_),
                                            static_cast<std::uint32_t>(seed_ >> 32)};
  block_ = detail::philox4x32_10(ctr, key);
  ++counter_;
  used_ = 0;
}

std::uint64_t RngHandle::next_u64() {
  if (used_ > 2) refill();
  const std::uint64_t out = (static_cast<std::uint64_t>(block_[used_]) << 32) |
                            block_[used_ + 1];
  used_ += 2;
  return out;
}

double RngHandle::uniform() {
  // (k + 0.5) / 2^53 never hits 0 or 1.
  const std::uint64_t k = next_u64() >> 11;
  return (static_cast<double>(k) + 0.5) * 0x1.0p-53;
}

std::uint64_t RngHandle::uniform_index(std::uint64_t bound) {
  if (bound == 0) throw ContractError("uniform_index: bound must be >= 1");
  __uint128_t m = static_cast<__uint128_t>(next_u64()) * bound;
  auto low = static_cast<std::uint64_t>(m);
  if (low < bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    while (low < threshold) {
      m = static_cast<__uint128_t>(next_u64()) * bound;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double RngHandle::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  double u, v, s;
  do {
    u = 2.0 * uniform() - 1.0;
    v = 2.0 * uniform() - 1.0;
    s = u * u + v * v;
  } while (s >= 1.0 || s == 0.0);
  const double scale = std::sqrt(-2.0 * std::log(s) / s);
  spare_normal_ = v * scale;
  has_spare_ = true;
  return u * scale;
}

double sample_log_gamma(double shape, RngHandle& rng) {
  if (!(shape > 0.0) || !std::isfinite(shape)) {
    throw DomainError("gamma shape must be finite and > 0");
  }
  if (shape < 1.0) {
    // G(a) = G(a + 1) * U^(1/a)
    return sample_log_gamma(shape + 1.0, rng) + std::log(rng.uniform()) / shape;
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    const double x = rng.normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = rng.uniform();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) {
      return std::log(d) + std::log(v);
    }
  }
}

std::vector<double> sample_dirichlet(std::span<const double> alpha,
                                     RngHandle& rng) {
  if (alpha.empty()) throw ContractError("sample_dirichlet: empty alpha");
  for (double a : alpha) {
    if (!(a > 0.0) || !std::isfinite(a)) {
      throw DomainError("sample_dirichlet: alpha entries must be finite and > 0");
    }
  }
  std::vector<double> logs(alpha.size());
  for (std::size_t j = 0; j < alpha.size(); ++j) {
    logs[j] = sample_log_gamma(alpha[j], rng);
  }
  const double peak = *std::max_element(logs.begin(), logs.end());
  double total = 0.0;
  for (double& x : logs) {
    x = std::exp(x - peak);
    total += x;
  }
  for (double& x : logs) x /= total;
  return logs;
}

std::size_t sample_categorical(std::span<const double> weights, RngHandle& rng) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0)) throw DomainError("categorical weights must be >= 0");
    total += w;
  }
  if (!(total > 0.0)) throw DomainError("categorical weights sum to zero");
  const double target = rng.uniform() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (weights[k] <= 0.0) continue;
    last_positive = k;
    acc += weights[k];
    if (target < acc) return k;
  }
  return last_positive;
}

std::vector<std::int64_t> sample_multinomial(std::int64_t n,
                                             std::span<const double> p,
                                             RngHandle& rng) {
  if (n < 0) throw DomainError("sample_multinomial: n must be >= 0");
  if (p.empty()) throw ContractError("sample_multinomial: empty p");
  double total = 0.0;
  for (double x : p) {
    if (!(x >= 0.0)) throw DomainError("sample_multinomial: p must be >= 0");
    total += x;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ContractError("sample_multinomial: p sums to " + std::to_string(total));
  }
  std::vector<double> cumulative(p.size());
  std::partial_sum(p.begin(), p.end(), cumulative.begin());
  std::vector<std::int64_t> counts(p.size(), 0);
  // Index of the last positive entry absorbs rounding at the top end.
  std::size_t last = p.size() - 1;
  while (last > 0 && p[last] == 0.0) --last;
  for (std::int64_t draw = 0; draw < n; ++draw) {
    const double u = rng.uniform() * cumulative.back();
    auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u);
    auto idx = static_cast<std::size_t>(it - cumulative.begin());
    if (idx > last) idx = last;
    ++counts[idx];
  }
  return counts;
}

std::int64_t sample_count(const SampleCountDist& pi, RngHandle& rng) {
  if (pi.empty()) throw ContractError("sample_count: empty distribution");
  const double u = rng.uniform();
  double acc = 0.0;
  std::int64_t last = pi.begin()->first;
  for (const auto& [n, prob] : pi) {
    if (prob <= 0.0) continue;
    last = n;
    acc += prob;
    if (u < acc) return n;
  }
  return last;
}

LabeledClient sample_client(const MdmParams& params, RngHandle& rng) {
  const std::size_t k = sample_categorical(params.tau(), rng);
  const std::int64_t n = sample_count(params.pi(k), rng);
  const auto p = sample_dirichlet(params.alpha(k), rng);
  LabeledClient out;
  out.record.counts = sample_multinomial(n, p, rng);
  out.record.n = n;
  out.component = k;
  return out;
}

std::vector<LabeledClient> gen_labeled_federation(const MdmParams& params,
                                                  std::size_t M,
                                                  const RngHandle& rng) {
  if (M < 1) throw ContractError("gen_synthetic_federation: M must be >= 1");
  std::vector<LabeledClient> out;
  out.reserve(M);
  for (std::size_t i = 0; i < M; ++i) {
    RngHandle client_rng = rng.split(i);
    out.push_back(sample_client(params, client_rng));
  }
  return out;
}

std::vector<ClientRecord> gen_synthetic_federation(const MdmParams& params,
                                                   std::size_t M,
                                                   const RngHandle& rng) {
  auto labeled = gen_labeled_federation(params, M, rng);
  std::vector<ClientRecord> out;
  out.reserve(labeled.size());
  for (auto& lc : labeled) out.push_back(std::move(lc.record));
  return out;
}

}  // namespace fedmdm
