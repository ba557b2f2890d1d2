#include "fedmdm/inference.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <thread>

#include "fedmdm/errors.hpp"
#include "fedmdm/kernels.hpp"
#include "fedmdm/special_fn.hpp"

namespace fedmdm {
namespace {

using special_fn::digamma;
using special_fn::log_gamma;

void merge_seen(std::vector<std::size_t>& seen,
                std::span<const std::size_t> cohort) {
  std::vector<std::size_t> merged;
  merged.reserve(seen.size() + cohort.size());
  std::set_union(seen.begin(), seen.end(), cohort.begin(), cohort.end(),
                 std::back_inserter(merged));
  seen = std::move(merged);
}

}  // namespace

void InferenceConfig::validate() const {
  if (K < 1) throw ContractError("inference: K must be >= 1");
  if (init_cohort_size < K || em_cohort_size < K) {
    throw ContractError("inference: cohort sizes must be >= K");
  }
  if (!(alpha_floor > 0.0)) throw ContractError("inference: alpha_floor must be > 0");
  if (early_stop && !trace_log_likelihood) {
    throw ContractError("inference: early stop needs log likelihood tracing");
  }
}

InitPacket client_init_packet(const ClientRecord& rec, std::size_t K,
                              std::size_t chosen_component) {
  const std::size_t C = rec.counts.size();
  InitPacket packet = make_zero_init_packet(K, C);
  std::vector<double> column(K, 0.0);
  column[chosen_component] = 1.0;
  packet.E.emplace(rec.n, std::move(column));
  const double inv_n = 1.0 / static_cast<double>(rec.n);
  for (std::size_t j = 0; j < C; ++j) {
    const double p = static_cast<double>(rec.counts[j]) * inv_n;
    packet.P[chosen_component * C + j] = p;
    packet.Q[chosen_component * C + j] = p * p;
  }
  return packet;
}

EmPacket client_em_packet(const ClientRecord& rec,
                          std::span<const double> counts_f64,
                          const MdmParams& params, DegeneratePolicy policy) {
  const std::size_t K = params.K();
  const std::size_t C = params.C();
  const double n = static_cast<double>(rec.n);
  const double log_n_factorial = log_gamma(n + 1.0);

  std::vector<double> log_weights(K, kLogZero);
  for (std::size_t k = 0; k < K; ++k) {
    const double pi_n = params.pi_at(k, rec.n);
    const double tau = params.tau(k);
    if (pi_n <= 0.0 || tau <= 0.0) continue;
    const double a0 = params.alpha0(k);
    const double log_dm = log_gamma(a0) + log_n_factorial - log_gamma(n + a0) +
                          kernels::dm_log_terms(counts_f64, params.alpha(k));
    log_weights[k] = std::log(tau) + log_dm + std::log(pi_n);
  }

  if (log_sum_exp(log_weights) == kLogZero) {
    if (policy == DegeneratePolicy::error) {
      throw DegenerateClientError("client with n = " + std::to_string(rec.n) +
                                  " has zero probability under every component");
    }
    return make_zero_em_packet(K, C);
  }

  EmPacket packet = make_zero_em_packet(K, C);
  packet.participation = 1.0;
  packet.omega = normalize_log_weights(log_weights);
  packet.E.emplace(rec.n, packet.omega);
  for (std::size_t k = 0; k < K; ++k) {
    const double w = packet.omega[k];
    if (w == 0.0) continue;
    kernels::digamma_diff_axpy(counts_f64, params.alpha(k), w,
                               std::span<double>(packet.u.data() + k * C, C));
    const double a0 = params.alpha0(k);
    packet.v[k] = w * (digamma(n + a0) - digamma(a0));
  }
  return packet;
}

std::optional<MdmParams> server_init_update(const AggregateReport& report,
                                            std::int64_t N, double alpha_floor) {
  const InitPacket& agg = report.init();
  const std::size_t K = agg.K;
  const std::size_t C = agg.C;

  std::vector<double> m(K, 0.0);
  for (const auto& [n, column] : agg.E) {
    for (std::size_t k = 0; k < K; ++k) m[k] += column[k];
  }
  for (double mk : m) {
    if (mk <= 0.0) return std::nullopt;
  }

  std::vector<double> tau(K, 1.0 / static_cast<double>(K));
  std::vector<SampleCountDist> pi(K);
  for (const auto& [n, column] : agg.E) {
    for (std::size_t k = 0; k < K; ++k) {
      if (column[k] > 0.0) pi[k][n] = column[k] / m[k];
    }
  }

  std::vector<std::vector<double>> alpha(K, std::vector<double>(C));
  for (std::size_t k = 0; k < K; ++k) {
    std::vector<double> p_bar(C), q_bar(C);
    for (std::size_t j = 0; j < C; ++j) {
      p_bar[j] = agg.P[k * C + j] / m[k];
      q_bar[j] = agg.Q[k * C + j] / m[k];
    }
    // Precision from the first category's first two moments; unit precision
    // when its empirical variance is not positive.
    const double variance = q_bar[0] - p_bar[0] * p_bar[0];
    const double precision =
        variance > 0.0 ? (p_bar[0] - q_bar[0]) / variance : 1.0;
    for (std::size_t j = 0; j < C; ++j) {
      alpha[k][j] = std::max(precision * p_bar[j], alpha_floor);
    }
  }
  return MdmParams(std::move(tau), std::move(alpha), std::move(pi), N);
}

MdmParams server_em_update(const MdmParams& current,
                           const AggregateReport& report, double alpha_floor) {
  const EmPacket& agg = report.em();
  const std::size_t K = current.K();
  const std::size_t C = current.C();
  if (agg.K != K || agg.C != C) {
    throw ContractError("aggregate dimensions do not match the current model");
  }
  const double contributors = agg.participation;
  if (!(contributors >= 1.0)) {
    throw NumericError("EM round had no contributing clients");
  }

  std::vector<double> tau(K);
  double tau_sum = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    tau[k] = agg.omega[k] / contributors;
    tau_sum += tau[k];
  }
  for (double& t : tau) t /= tau_sum;

  std::vector<std::vector<double>> alpha = current.alpha_rows();
  std::vector<SampleCountDist> pi = current.pi();
  for (std::size_t k = 0; k < K; ++k) {
    const double omega_k = agg.omega[k];
    if (omega_k < kDeadComponentFraction * contributors) continue;

    SampleCountDist next;
    for (const auto& [n, column] : agg.E) {
      if (column[k] > 0.0) next[n] = column[k] / omega_k;
    }
    pi[k] = std::move(next);

    const double v = agg.v[k];
    for (std::size_t j = 0; j < C; ++j) {
      alpha[k][j] = std::max(alpha[k][j] * agg.u[k * C + j] / v, alpha_floor);
    }
  }
  return MdmParams(std::move(tau), std::move(alpha), std::move(pi), current.N());
}

MdmParams init_params(const ClientPopulation& pop, const InferenceConfig& cfg,
                      const RngHandle& rng, std::vector<std::size_t>* cohort_out) {
  cfg.validate();
  RngHandle cohort_rng = rng.split(0);
  const auto cohort = sample_cohort(pop, cfg.init_cohort_size, cohort_rng);
  if (cohort_out) *cohort_out = cohort;

  for (int attempt = 0; attempt < kInitMaxAttempts; ++attempt) {
    const RngHandle assign_rng = rng.split(1 + static_cast<std::uint64_t>(attempt));
    auto client_fn = [&](std::size_t i) -> ClientStatsPacket {
      RngHandle client_rng = assign_rng.split(i);
      const auto k = static_cast<std::size_t>(client_rng.uniform_index(cfg.K));
      return client_init_packet(pop[i], cfg.K, k);
    };
    const AggregateReport report =
        run_cohort_round(cohort, client_fn, cfg.execution);
    if (auto params = server_init_update(report, pop.max_n(), cfg.alpha_floor)) {
      return *std::move(params);
    }
  }
  throw NumericError("initialization left a component without clients after " +
                     std::to_string(kInitMaxAttempts) + " attempts");
}

MdmParams em_round(const ClientPopulation& pop, const MdmParams& params,
                   const InferenceConfig& cfg, RngHandle& rng,
                   std::vector<std::size_t>* cohort_out) {
  if (params.C() != pop.C()) {
    throw ContractError("model and population disagree on category count");
  }
  const auto cohort = sample_cohort(pop, cfg.em_cohort_size, rng);
  if (cohort_out) *cohort_out = cohort;
  auto client_fn = [&](std::size_t i) -> ClientStatsPacket {
    return client_em_packet(pop[i], pop.counts_f64(i), params,
                            cfg.degenerate_policy);
  };
  const AggregateReport report = run_cohort_round(cohort, client_fn, cfg.execution);
  return server_em_update(params, report, cfg.alpha_floor);
}

double population_log_likelihood(const ClientPopulation& pop,
                                 const MdmParams& params,
                                 const ExecutionPolicy& policy) {
  std::vector<double> per_client(pop.size());
  const std::size_t workers =
      std::max<std::size_t>(1, std::min(policy.threads, pop.size()));
  auto body = [&](std::size_t w) {
    for (std::size_t i = w; i < pop.size(); i += workers) {
      per_client[i] = log_mdm_pmf(pop[i], params);
    }
  };
  if (workers == 1) {
    body(0);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(body, w);
    for (auto& t : pool) t.join();
  }
  // Summed in client order regardless of thread count.
  return std::accumulate(per_client.begin(), per_client.end(), 0.0);
}

FitResult fit(const ClientPopulation& pop, const InferenceConfig& cfg,
              const RngHandle& rng) {
  cfg.validate();
  InferenceTrace trace;
  std::vector<std::size_t> cohort;
  MdmParams params = init_params(pop, cfg, rng.split(0), &cohort);
  merge_seen(trace.clients_seen, cohort);
  trace.snapshots.push_back(params);
  if (cfg.trace_log_likelihood) {
    trace.log_likelihood.push_back(
        population_log_likelihood(pop, params, cfg.execution));
  }

  std::size_t flat_rounds = 0;
  for (std::size_t t = 0; t < cfg.T; ++t) {
    RngHandle round_rng = rng.split(t + 1);
    params = em_round(pop, params, cfg, round_rng, &cohort);
    merge_seen(trace.clients_seen, cohort);
    trace.snapshots.push_back(params);
    if (cfg.trace_log_likelihood) {
      const double ll = population_log_likelihood(pop, params, cfg.execution);
      const double gain = ll - trace.log_likelihood.back();
      trace.log_likelihood.push_back(ll);
      if (cfg.early_stop) {
        flat_rounds = gain < cfg.early_stop_tolerance ? flat_rounds + 1 : 0;
        if (flat_rounds >= cfg.early_stop_window) {
          trace.stopped_early = true;
          break;
        }
      }
    }
  }
  return FitResult{std::move(params), std::move(trace)};
}

MdmParams full_batch_update(std::span<const ClientRecord> records,
                            const MdmParams& params, double alpha_floor,
                            DegeneratePolicy policy) {
  if (records.empty()) throw ContractError("full_batch_update: no records");
  const std::size_t K = params.K();
  const std::size_t C = params.C();

  std::vector<double> omega_sum(K, 0.0);
  std::vector<std::map<std::int64_t, double>> n_weight(K);
  std::vector<std::vector<double>> numer(K, std::vector<double>(C, 0.0));
  std::vector<double> denom(K, 0.0);
  double used = 0.0;

  for (const auto& rec : records) {
    std::vector<double> omega;
    try {
      omega = responsibilities(rec, params);
    } catch (const DegenerateClientError&) {
      if (policy == DegeneratePolicy::error) throw;
      continue;
    }
    used += 1.0;
    for (std::size_t k = 0; k < K; ++k) {
      const double w = omega[k];
      if (w == 0.0) continue;
      omega_sum[k] += w;
      n_weight[k][rec.n] += w;
      const auto alpha = params.alpha(k);
      for (std::size_t j = 0; j < C; ++j) {
        if (rec.counts[j] == 0) continue;
        numer[k][j] += w * (digamma(static_cast<double>(rec.counts[j]) + alpha[j]) -
                            digamma(alpha[j]));
      }
      const double a0 = params.alpha0(k);
      denom[k] += w * (digamma(static_cast<double>(rec.n) + a0) - digamma(a0));
    }
  }
  if (used < 1.0) throw NumericError("full_batch_update: every client is degenerate");

  std::vector<double> tau(K);
  double tau_sum = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    tau[k] = omega_sum[k] / used;
    tau_sum += tau[k];
  }
  for (double& t : tau) t /= tau_sum;

  std::vector<std::vector<double>> alpha = params.alpha_rows();
  std::vector<SampleCountDist> pi = params.pi();
  for (std::size_t k = 0; k < K; ++k) {
    if (omega_sum[k] < kDeadComponentFraction * used) continue;
    SampleCountDist next;
    for (const auto& [n, w] : n_weight[k]) {
      if (w > 0.0) next[n] = w / omega_sum[k];
    }
    pi[k] = std::move(next);
    for (std::size_t j = 0; j < C; ++j) {
      alpha[k][j] = std::max(alpha[k][j] * numer[k][j] / denom[k], alpha_floor);
    }
  }
  return MdmParams(std::move(tau), std::move(alpha), std::move(pi), params.N());
}

}  // namespace fedmdm
