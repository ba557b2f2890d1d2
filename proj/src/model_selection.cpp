#include "fedmdm/model_selection.hpp"

#include <algorithm>
#include <exception>
#include <limits>
#include <numeric>
#include <string>
#include <thread>

#include "fedmdm/errors.hpp"

namespace fedmdm {
namespace {

constexpr std::uint64_t kValidationStream = 0x5641'4C49'4441'5445ULL;

double mean_log_pmf(const ClientPopulation& pop,
                    std::span<const std::size_t> cohort,
                    const MdmParams& params) {
  double total = 0.0;
  for (std::size_t i : cohort) total += log_mdm_pmf(pop[i], params);
  return total / static_cast<double>(cohort.size());
}

}  // namespace

std::size_t choose_k(std::span<const KCandidate> candidates, double tolerance) {
  if (candidates.empty()) throw ContractError("choose_k: no candidates");
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& c : candidates) best = std::max(best, c.mean_val_loglik);
  std::size_t chosen = std::numeric_limits<std::size_t>::max();
  for (const auto& c : candidates) {
    // Every candidate ties when all validation likelihoods are log-zero.
    const bool ties = best == kLogZero || c.mean_val_loglik >= best - tolerance;
    if (ties) chosen = std::min(chosen, c.K);
  }
  return chosen;
}

KSelectionReport select_k(const ClientPopulation& pop,
                          std::span<const std::size_t> candidate_ks,
                          const InferenceConfig& cfg,
                          const SelectKOptions& options, const RngHandle& rng) {
  if (candidate_ks.empty()) throw ContractError("select_k: no candidate K values");
  if (options.val_cohort_size < 1) {
    throw ContractError("select_k: validation cohort size must be >= 1");
  }
  std::vector<std::size_t> ks(candidate_ks.begin(), candidate_ks.end());
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  if (ks.front() < 1) throw ContractError("select_k: K must be >= 1");

  KSelectionReport report;
  report.tie_tolerance = options.tie_tolerance;
  report.external_validation = options.validation_pop != nullptr;

  // Validation cohort first, so no training cohort can ever include it.
  RngHandle val_rng = rng.split(kValidationStream);
  std::vector<std::size_t> train_index;  // training pop row -> pop row
  if (options.validation_pop) {
    report.validation_cohort =
        sample_cohort(*options.validation_pop, options.val_cohort_size, val_rng);
    train_index.resize(pop.size());
    std::iota(train_index.begin(), train_index.end(), std::size_t{0});
  } else {
    if (options.val_cohort_size >= pop.size()) {
      throw ContractError(
          "select_k: validation cohort of " + std::to_string(options.val_cohort_size) +
          " leaves no unseen clients for training in a population of " +
          std::to_string(pop.size()));
    }
    report.validation_cohort = sample_cohort(pop, options.val_cohort_size, val_rng);
    std::vector<bool> held_out(pop.size(), false);
    for (std::size_t i : report.validation_cohort) held_out[i] = true;
    for (std::size_t i = 0; i < pop.size(); ++i) {
      if (!held_out[i]) train_index.push_back(i);
    }
  }

  std::vector<ClientRecord> train_records;
  train_records.reserve(train_index.size());
  for (std::size_t i : train_index) train_records.push_back(pop[i]);
  const ClientPopulation train_pop(std::move(train_records));

  const ClientPopulation& val_pop =
      options.validation_pop ? *options.validation_pop : pop;

  std::vector<std::optional<KCandidate>> fitted(ks.size());
  std::vector<std::exception_ptr> errors(ks.size());
  auto fit_one = [&](std::size_t slot, std::size_t threads) {
    try {
      InferenceConfig local = cfg;
      local.K = ks[slot];
      local.init_cohort_size = std::min(local.init_cohort_size, train_pop.size());
      local.em_cohort_size = std::min(local.em_cohort_size, train_pop.size());
      local.execution.threads = threads;
      FitResult result = fit(train_pop, local, rng.split(ks[slot]));

      if (!options.validation_pop) {
        // Map back and confirm the held-out clients were never trained on.
        std::vector<std::size_t> seen;
        seen.reserve(result.trace.clients_seen.size());
        for (std::size_t i : result.trace.clients_seen) seen.push_back(train_index[i]);
        std::vector<std::size_t> overlap;
        std::set_intersection(seen.begin(), seen.end(),
                              report.validation_cohort.begin(),
                              report.validation_cohort.end(),
                              std::back_inserter(overlap));
        if (!overlap.empty()) {
          throw ContractError("select_k: validation cohort overlaps training");
        }
      }
      const double mean =
          mean_log_pmf(val_pop, report.validation_cohort, result.params);
      fitted[slot] = KCandidate{ks[slot], std::move(result.params), mean};
    } catch (...) {
      errors[slot] = std::current_exception();
    }
  };

  const std::size_t workers = std::min(cfg.execution.threads, ks.size());
  if (workers <= 1) {
    for (std::size_t s = 0; s < ks.size(); ++s) fit_one(s, cfg.execution.threads);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t s = w; s < ks.size(); s += workers) fit_one(s, 1);
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  for (auto& c : fitted) report.candidates.push_back(std::move(*c));
  report.chosen_K = choose_k(report.candidates, options.tie_tolerance);
  return report;
}

}  // namespace fedmdm
