#include "fedmdm/federation.hpp"

#include <algorithm>
#include <exception>
#include <numeric>
#include <string>
#include <thread>

#include "fedmdm/errors.hpp"
#include "fedmdm/kernels.hpp"

namespace fedmdm {
namespace {

void add_columns(SparseColumns& dst, const SparseColumns& src, std::size_t K) {
  for (const auto& [n, column] : src) {
    if (column.size() != K) throw ContractError("secure_sum: E column has wrong K");
    auto [it, inserted] = dst.try_emplace(n, column);
    if (!inserted) kernels::accumulate(it->second, column);
  }
}

void add_dense(std::vector<double>& dst, const std::vector<double>& src,
               const char* field) {
  if (dst.size() != src.size()) {
    throw ContractError(std::string("secure_sum: dimension mismatch in ") + field);
  }
  kernels::accumulate(dst, src);
}

void add_into(InitPacket& dst, const InitPacket& src) {
  if (dst.K != src.K || dst.C != src.C) {
    throw ContractError("secure_sum: init packets differ in K or C");
  }
  add_columns(dst.E, src.E, dst.K);
  add_dense(dst.P, src.P, "P");
  add_dense(dst.Q, src.Q, "Q");
}

void add_into(EmPacket& dst, const EmPacket& src) {
  if (dst.K != src.K || dst.C != src.C) {
    throw ContractError("secure_sum: EM packets differ in K or C");
  }
  add_dense(dst.omega, src.omega, "omega");
  add_columns(dst.E, src.E, dst.K);
  add_dense(dst.u, src.u, "u");
  add_dense(dst.v, src.v, "v");
  dst.participation += src.participation;
}

void add_packet(ClientStatsPacket& dst, const ClientStatsPacket& src) {
  if (dst.index() != src.index()) {
    throw ContractError("secure_sum: mixed init and EM packets");
  }
  if (auto* init = std::get_if<InitPacket>(&dst)) {
    add_into(*init, std::get<InitPacket>(src));
  } else {
    add_into(std::get<EmPacket>(dst), std::get<EmPacket>(src));
  }
}

void check_shape(const ClientStatsPacket& packet) {
  std::visit(
      [](const auto& p) {
        using P = std::decay_t<decltype(p)>;
        const std::size_t kc = p.K * p.C;
        if constexpr (std::is_same_v<P, InitPacket>) {
          if (p.P.size() != kc || p.Q.size() != kc) {
            throw ContractError("init packet P/Q is not K x C");
          }
        } else {
          if (p.omega.size() != p.K || p.v.size() != p.K || p.u.size() != kc) {
            throw ContractError("EM packet has inconsistent dimensions");
          }
        }
      },
      packet);
}

}  // namespace

ClientPopulation::ClientPopulation(std::vector<ClientRecord> clients)
    : clients_(std::move(clients)) {
  if (clients_.empty()) throw ContractError("client population is empty");
  C_ = clients_.front().counts.size();
  counts_f64_.reserve(clients_.size() * C_);
  for (std::size_t i = 0; i < clients_.size(); ++i) {
    const auto& rec = clients_[i];
    rec.validate();
    if (rec.counts.size() != C_) {
      throw ContractError("client " + std::to_string(i) + " has " +
                          std::to_string(rec.counts.size()) +
                          " categories, expected " + std::to_string(C_));
    }
    for (auto c : rec.counts) counts_f64_.push_back(static_cast<double>(c));
    max_n_ = std::max(max_n_, rec.n);
  }
}

const InitPacket& AggregateReport::init() const {
  if (const auto* p = std::get_if<InitPacket>(&sum)) return *p;
  throw ContractError("aggregate holds EM statistics, not init statistics");
}

const EmPacket& AggregateReport::em() const {
  if (const auto* p = std::get_if<EmPacket>(&sum)) return *p;
  throw ContractError("aggregate holds init statistics, not EM statistics");
}

InitPacket make_zero_init_packet(std::size_t K, std::size_t C) {
  InitPacket p;
  p.K = K;
  p.C = C;
  p.P.assign(K * C, 0.0);
  p.Q.assign(K * C, 0.0);
  return p;
}

EmPacket make_zero_em_packet(std::size_t K, std::size_t C) {
  EmPacket p;
  p.K = K;
  p.C = C;
  p.omega.assign(K, 0.0);
  p.u.assign(K * C, 0.0);
  p.v.assign(K, 0.0);
  p.participation = 0.0;
  return p;
}

void SecureAggregator::add(const ClientStatsPacket& packet) {
  check_shape(packet);
  if (!sum_) {
    sum_ = packet;
  } else {
    add_packet(*sum_, packet);
  }
  ++count_;
}

void SecureAggregator::merge(const SecureAggregator& other) {
  if (!other.sum_) return;
  if (!sum_) {
    sum_ = other.sum_;
  } else {
    add_packet(*sum_, *other.sum_);
  }
  count_ += other.count_;
}

AggregateReport SecureAggregator::report() const {
  if (!sum_) throw ContractError("secure_sum: no packets");
  return AggregateReport{*sum_, count_};
}

AggregateReport secure_sum(std::span<const ClientStatsPacket> packets) {
  SecureAggregator agg;
  for (const auto& p : packets) agg.add(p);
  return agg.report();
}

std::vector<std::size_t> sample_cohort(const ClientPopulation& pop,
                                       std::size_t cohort_size,
                                       RngHandle& rng) {
  std::vector<std::size_t> all(pop.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return sample_cohort_from(all, cohort_size, rng);
}

std::vector<std::size_t> sample_cohort_from(std::span<const std::size_t> eligible,
                                            std::size_t cohort_size,
                                            RngHandle& rng) {
  if (cohort_size < 1 || cohort_size > eligible.size()) {
    throw ContractError("cohort size " + std::to_string(cohort_size) +
                        " not in [1, " + std::to_string(eligible.size()) + "]");
  }
  std::vector<std::size_t> pool(eligible.begin(), eligible.end());
  if (cohort_size == pool.size()) {
    std::sort(pool.begin(), pool.end());
    return pool;
  }
  // Partial Fisher-Yates: the first cohort_size slots become the sample.
  for (std::size_t i = 0; i < cohort_size; ++i) {
    const std::size_t j = i + rng.uniform_index(pool.size() - i);
    std::swap(pool[i], pool[j]);
  }
  pool.resize(cohort_size);
  std::sort(pool.begin(), pool.end());
  return pool;
}

AggregateReport run_cohort_round(
    std::span<const std::size_t> cohort,
    const std::function<ClientStatsPacket(std::size_t)>& client_fn,
    const ExecutionPolicy& policy) {
  if (cohort.empty()) throw ContractError("empty cohort");
  const std::size_t workers =
      std::max<std::size_t>(1, std::min(policy.threads, cohort.size()));

  // Static contiguous chunks keep the per-worker ranges independent of timing.
  auto chunk_bounds = [&](std::size_t w) {
    const std::size_t base = cohort.size() / workers;
    const std::size_t extra = cohort.size() % workers;
    const std::size_t begin = w * base + std::min(w, extra);
    return std::pair{begin, begin + base + (w < extra ? 1 : 0)};
  };

  auto run_workers = [&](auto&& body) {
    if (workers == 1) {
      body(0);
      return;
    }
    std::vector<std::exception_ptr> errors(workers);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          body(w);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  };

  if (policy.deterministic) {
    std::vector<ClientStatsPacket> packets(cohort.size());
    run_workers([&](std::size_t w) {
      auto [begin, end] = chunk_bounds(w);
      for (std::size_t i = begin; i < end; ++i) packets[i] = client_fn(cohort[i]);
    });
    return secure_sum(packets);
  }

  std::vector<SecureAggregator> partial(workers);
  run_workers([&](std::size_t w) {
    auto [begin, end] = chunk_bounds(w);
    for (std::size_t i = begin; i < end; ++i) partial[w].add(client_fn(cohort[i]));
  });
  SecureAggregator total;
  for (const auto& p : partial) total.merge(p);
  return total.report();
}

}  // namespace fedmdm
