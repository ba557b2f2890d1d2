#include "fedmdm/cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fedmdm/errors.hpp"
#include "fedmdm/federation.hpp"
#include "fedmdm/inference.hpp"
#include "fedmdm/ingestion.hpp"
#include "fedmdm/io.hpp"
#include "fedmdm/kernels.hpp"
#include "fedmdm/metrics.hpp"
#include "fedmdm/model_selection.hpp"
#include "fedmdm/partitioner.hpp"
#include "fedmdm/presets.hpp"
#include "fedmdm/sampling.hpp"

namespace fedmdm::cli {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

struct Common {
  std::optional<std::uint64_t> seed;
  std::size_t threads = 1;
  bool deterministic = true;
  std::string kernels = "auto";
};

struct Manifest {
  std::string subcommand;
  ordered_json inputs = ordered_json::object();
  ordered_json outputs = ordered_json::object();
  ordered_json config = ordered_json::object();
};

void add_common(CLI::App* sub, Common& common, bool needs_seed) {
  auto* seed = sub->add_option("--seed", common.seed, "RNG seed");
  if (needs_seed) seed->required();
  sub->add_option("--threads", common.threads, "Worker threads for per-client work")
      ->check(CLI::PositiveNumber);
  sub->add_flag("--deterministic,!--no-deterministic", common.deterministic,
                "Ordered reduction of client packets (default on)");
  sub->add_option("--kernels", common.kernels, "Kernel variant: auto, scalar, avx2, neon")
      ->check(CLI::IsMember({"auto", "scalar", "avx2", "neon"}));
}

ExecutionPolicy policy_of(const Common& common) {
  return ExecutionPolicy{common.threads, common.deterministic};
}

void apply_kernels(const Common& common) {
  if (common.kernels == "auto") return;
  const auto isa = kernels::parse_isa(common.kernels);
  if (!isa || !kernels::select(*isa)) {
    throw ContractError("kernel variant '" + common.kernels +
                        "' is not available on this machine");
  }
}

void write_manifest(const std::string& primary_output, const Manifest& m,
                    const Common& common, const std::vector<std::string>& argv) {
  ordered_json doc;
  doc["tool"] = "fedmdm";
  doc["version"] = std::string(kVersion);
  doc["subcommand"] = m.subcommand;
  doc["argv"] = argv;
  doc["seed"] = common.seed ? json(*common.seed) : json(nullptr);
  doc["threads"] = common.threads;
  doc["deterministic"] = common.deterministic;
  doc["kernels"] = std::string(kernels::isa_name(kernels::active().isa));
  doc["inputs"] = m.inputs;
  doc["outputs"] = m.outputs;
  doc["config"] = m.config;
  io::write_text_file(primary_output + ".manifest.json", doc.dump(2) + "\n");
}

void require_distinct(const std::vector<std::string>& reads,
                      const std::vector<std::string>& writes) {
  for (std::size_t i = 0; i < writes.size(); ++i) {
    if (writes[i].empty()) continue;
    for (const auto& r : reads) {
      if (r == writes[i]) throw ContractError("output path '" + r + "' is also an input");
    }
    for (std::size_t j = i + 1; j < writes.size(); ++j) {
      if (writes[i] == writes[j]) {
        throw ContractError("output path '" + writes[i] + "' given twice");
      }
    }
  }
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  return out;
}

// Marginal sample-count distribution sum_k tau_k pi_k.
SampleCountDist mixture_count_distribution(const MdmParams& params) {
  SampleCountDist dist;
  for (std::size_t k = 0; k < params.K(); ++k) {
    for (const auto& [n, p] : params.pi(k)) dist[n] += params.tau(k) * p;
  }
  double total = 0.0;
  for (const auto& [n, p] : dist) total += p;
  for (auto& [n, p] : dist) p /= total;
  return dist;
}

BinningSpec load_binning(const std::string& path, bool income) {
  if (income == !path.empty()) {
    throw ContractError("give exactly one of --binning or --income");
  }
  return income ? income_binning() : io::read_binning_file(path);
}

DegeneratePolicy parse_degenerate(const std::string& name) {
  return name == "error" ? DegeneratePolicy::error : DegeneratePolicy::skip;
}

// ---------------------------------------------------------------- commands

struct GenArgs {
  std::string preset;
  std::string params;
  std::size_t clients = 0;
  std::string out;
  std::string labels_out;
  std::string truth_out;
};

int cmd_gen(const GenArgs& a, const Common& common, Manifest& m,
            const std::vector<std::string>& argv) {
  if (a.preset.empty() == a.params.empty()) {
    throw ContractError("give exactly one of --preset or --params");
  }
  require_distinct({a.params}, {a.out, a.labels_out, a.truth_out});
  const MdmParams truth = a.preset.empty() ? io::read_params_file(a.params)
                                           : preset(a.preset);
  const auto labeled = gen_labeled_federation(truth, a.clients, RngHandle(*common.seed));

  auto out = open_output(a.out);
  for (const auto& lc : labeled) out << io::record_to_json(lc.record) << '\n';
  out.close();
  if (!a.labels_out.empty()) {
    auto lab = open_output(a.labels_out);
    lab << "client,component\n";
    for (std::size_t i = 0; i < labeled.size(); ++i) {
      lab << i << ',' << labeled[i].component << '\n';
    }
    m.outputs["labels"] = a.labels_out;
  }
  if (!a.truth_out.empty()) {
    io::write_params_file(a.truth_out, truth);
    m.outputs["truth"] = a.truth_out;
  }
  if (!a.preset.empty()) m.config["preset"] = a.preset;
  if (!a.params.empty()) m.inputs["params"] = a.params;
  m.config["clients"] = a.clients;
  m.outputs["population"] = a.out;
  write_manifest(a.out, m, common, argv);
  return kExitOk;
}

struct IngestArgs {
  std::string input;
  std::string binning;
  bool income = false;
  std::string out;
  std::string ids_out;
};

int cmd_ingest(const IngestArgs& a, const Common& common, Manifest& m,
               const std::vector<std::string>& argv) {
  require_distinct({a.input, a.binning}, {a.out, a.ids_out});
  const BinningSpec spec = load_binning(a.binning, a.income);
  const RecordTable table = read_record_csv_file(a.input);
  std::vector<std::string> ids;
  const ClientPopulation pop = build_clients(table, spec, &ids);
  io::write_population_file(a.out, pop.records());
  if (!a.ids_out.empty()) {
    auto out = open_output(a.ids_out);
    out << "client,client_id\n";
    for (std::size_t i = 0; i < ids.size(); ++i) out << i << ',' << ids[i] << '\n';
    m.outputs["client_ids"] = a.ids_out;
  }
  m.inputs["table"] = a.input;
  if (a.income) {
    m.config["binning"] = "income";
  } else {
    m.inputs["binning"] = a.binning;
  }
  m.config["clients"] = pop.size();
  m.config["categories"] = pop.C();
  m.outputs["population"] = a.out;
  write_manifest(a.out, m, common, argv);
  return kExitOk;
}

struct FitArgs {
  std::size_t K = 1;
  std::size_t rounds = 100;
  std::size_t init_cohort = 0;
  std::size_t em_cohort = 0;
  double alpha_floor = kDefaultAlphaFloor;
  std::string degenerate = "skip";
  bool early_stop = false;
};

void add_fit_options(CLI::App* sub, FitArgs& f) {
  sub->add_option("--rounds", f.rounds, "EM rounds T");
  sub->add_option("--init-cohort", f.init_cohort,
                  "Initialization cohort size (default: whole population)");
  sub->add_option("--em-cohort", f.em_cohort,
                  "Per-round cohort size (default: whole population)");
  sub->add_option("--alpha-floor", f.alpha_floor, "Lower bound on alpha entries")
      ->check(CLI::PositiveNumber);
  sub->add_option("--degenerate", f.degenerate,
                  "Clients with zero likelihood under every component: skip or error")
      ->check(CLI::IsMember({"skip", "error"}));
  sub->add_flag("--early-stop", f.early_stop,
                "Stop when the log likelihood stalls (needs the likelihood trace)");
}

InferenceConfig config_of(const FitArgs& f, std::size_t pop_size, const Common& common) {
  InferenceConfig cfg;
  cfg.K = f.K;
  cfg.T = f.rounds;
  cfg.init_cohort_size = f.init_cohort ? f.init_cohort : pop_size;
  cfg.em_cohort_size = f.em_cohort ? f.em_cohort : pop_size;
  cfg.alpha_floor = f.alpha_floor;
  cfg.degenerate_policy = parse_degenerate(f.degenerate);
  cfg.early_stop = f.early_stop;
  cfg.trace_log_likelihood = f.early_stop;
  cfg.execution = policy_of(common);
  return cfg;
}

void record_fit_config(ordered_json& config, const InferenceConfig& cfg) {
  config["rounds"] = cfg.T;
  config["init_cohort"] = cfg.init_cohort_size;
  config["em_cohort"] = cfg.em_cohort_size;
  config["alpha_floor"] = cfg.alpha_floor;
  config["degenerate"] = cfg.degenerate_policy == DegeneratePolicy::skip ? "skip" : "error";
  config["early_stop"] = cfg.early_stop;
}

struct InferArgs {
  FitArgs fit;
  std::string population;
  std::string out;
  std::string trace;
  std::string trace_params;
  std::string truth;
  bool trace_loglik = false;
};

int cmd_infer(const InferArgs& a, const Common& common, Manifest& m,
              const std::vector<std::string>& argv) {
  require_distinct({a.population, a.truth}, {a.out, a.trace, a.trace_params});
  const ClientPopulation pop(io::read_population_file(a.population));
  InferenceConfig cfg = config_of(a.fit, pop.size(), common);
  cfg.trace_log_likelihood = cfg.trace_log_likelihood || a.trace_loglik;
  const std::optional<MdmParams> truth =
      a.truth.empty() ? std::nullopt : std::optional(io::read_params_file(a.truth));

  const FitResult result = fit(pop, cfg, RngHandle(*common.seed));
  io::write_params_file(a.out, result.params);

  if (!a.trace.empty()) {
    auto out = open_output(a.trace);
    out << "round,clients_seen,log_likelihood";
    if (truth) out << ",nmse_tau,nmse_alpha,nmse_pi";
    out << '\n';
    const auto& tr = result.trace;
    for (std::size_t t = 0; t < tr.snapshots.size(); ++t) {
      out << t << ',' << (t < tr.clients_seen.size() ? tr.clients_seen[t] : 0) << ',';
      if (t < tr.log_likelihood.size()) out << io::format_double(tr.log_likelihood[t]);
      if (truth) {
        const auto r = align_and_score(tr.snapshots[t], *truth);
        out << ',' << io::format_double(r.nmse_tau) << ','
            << io::format_double(r.nmse_alpha) << ',' << io::format_double(r.nmse_pi);
      }
      out << '\n';
    }
    m.outputs["trace"] = a.trace;
  }
  if (!a.trace_params.empty()) {
    auto out = open_output(a.trace_params);
    for (std::size_t t = 0; t < result.trace.snapshots.size(); ++t) {
      out << "{\"round\":" << t
          << ",\"params\":" << io::params_to_json(result.trace.snapshots[t]) << "}\n";
    }
    m.outputs["trace_params"] = a.trace_params;
  }
  m.inputs["population"] = a.population;
  if (truth) m.inputs["truth"] = a.truth;
  m.config["K"] = cfg.K;
  record_fit_config(m.config, cfg);
  m.config["trace_log_likelihood"] = cfg.trace_log_likelihood;
  m.config["stopped_early"] = result.trace.stopped_early;
  m.outputs["params"] = a.out;
  write_manifest(a.out, m, common, argv);
  return kExitOk;
}

struct SelectArgs {
  FitArgs fit;
  std::string population;
  std::string validation;
  std::vector<std::size_t> candidates;
  std::size_t val_cohort = 0;
  double tie_tolerance = kDefaultTieTolerance;
  std::string out;
  std::string csv;
};

int cmd_select(const SelectArgs& a, const Common& common, Manifest& m,
               const std::vector<std::string>& argv) {
  require_distinct({a.population, a.validation}, {a.out, a.csv});
  const ClientPopulation pop(io::read_population_file(a.population));
  std::optional<ClientPopulation> validation;
  if (!a.validation.empty()) {
    validation.emplace(io::read_population_file(a.validation));
  }
  SelectKOptions options;
  options.tie_tolerance = a.tie_tolerance;
  options.validation_pop = validation ? &*validation : nullptr;
  options.val_cohort_size = a.val_cohort;
  if (options.val_cohort_size == 0) {
    options.val_cohort_size = validation ? validation->size() : std::max<std::size_t>(1, pop.size() / 5);
  }
  // Cohort defaults refer to the clients left for training.
  const std::size_t train_size =
      validation ? pop.size() : pop.size() - std::min(pop.size(), options.val_cohort_size);
  InferenceConfig cfg = config_of(a.fit, train_size, common);

  const KSelectionReport report =
      select_k(pop, a.candidates, cfg, options, RngHandle(*common.seed));
  io::write_text_file(a.out, io::selection_report_to_json(report) + "\n");
  if (!a.csv.empty()) {
    auto out = open_output(a.csv);
    io::write_selection_csv(out, report);
    m.outputs["csv"] = a.csv;
  }
  m.inputs["population"] = a.population;
  if (validation) m.inputs["validation"] = a.validation;
  m.config["candidates"] = a.candidates;
  m.config["val_cohort"] = options.val_cohort_size;
  m.config["tie_tolerance"] = a.tie_tolerance;
  record_fit_config(m.config, cfg);
  m.config["chosen_K"] = report.chosen_K;
  m.outputs["report"] = a.out;
  write_manifest(a.out, m, common, argv);
  std::cout << "chosen_K=" << report.chosen_K << '\n';
  return kExitOk;
}

struct PartitionArgs {
  std::string input;
  std::string binning;
  bool income = false;
  std::string generator = "mdm";
  std::string params;
  std::string true_population;
  std::size_t clients = 0;
  std::string out;
};

int cmd_partition(const PartitionArgs& a, const Common& common, Manifest& m,
                  const std::vector<std::string>& argv) {
  require_distinct({a.input, a.binning, a.params, a.true_population}, {a.out});
  const BinningSpec spec = load_binning(a.binning, a.income);
  const CentralPool pool = build_central_pool(read_record_csv_file(a.input), spec);
  const RngHandle rng(*common.seed);

  PartitionPlan plan;
  if (a.generator == "mdm") {
    if (a.params.empty() || a.clients == 0) {
      throw ContractError("the mdm generator needs --params and --clients");
    }
    plan = partition_mdm(pool, io::read_params_file(a.params), a.clients, rng);
    m.inputs["params"] = a.params;
  } else if (a.generator == "fully_iid") {
    if (a.clients == 0) throw ContractError("the fully_iid generator needs --clients");
    SampleCountDist n_dist;
    if (!a.true_population.empty()) {
      n_dist = empirical_count_distribution(
          ClientPopulation(io::read_population_file(a.true_population)));
      m.inputs["true_population"] = a.true_population;
    } else if (!a.params.empty()) {
      n_dist = mixture_count_distribution(io::read_params_file(a.params));
      m.inputs["params"] = a.params;
    } else {
      throw ContractError("the fully_iid generator needs --true-population or --params");
    }
    plan = partition_fully_iid(pool, n_dist, a.clients, rng);
  } else {
    if (a.true_population.empty()) {
      throw ContractError("the conditionally_iid generator needs --true-population");
    }
    plan = partition_conditionally_iid(
        pool, ClientPopulation(io::read_population_file(a.true_population)), rng);
    m.inputs["true_population"] = a.true_population;
  }

  auto out = open_output(a.out);
  io::write_plan_jsonl(out, plan);
  out.close();
  m.inputs["table"] = a.input;
  if (a.income) {
    m.config["binning"] = "income";
  } else {
    m.inputs["binning"] = a.binning;
  }
  m.config["generator"] = a.generator;
  m.config["clients"] = plan.clients.size();
  m.outputs["plan"] = a.out;
  write_manifest(a.out, m, common, argv);
  return kExitOk;
}

struct ExportArgs {
  std::string plan;
  std::string population;
  std::string out;
};

int cmd_export(const ExportArgs& a, const Common& common, Manifest& m,
               const std::vector<std::string>& argv) {
  if (a.plan.empty() == a.population.empty()) {
    throw ContractError("give exactly one of --plan or --population");
  }
  require_distinct({a.plan, a.population}, {a.out});
  std::vector<std::vector<double>> rows;
  if (!a.plan.empty()) {
    std::ifstream in(a.plan);
    if (!in) throw DataError("cannot open " + a.plan);
    PartitionPlan plan;
    plan.clients = io::read_plan_jsonl(in);
    rows = export_histograms(plan);
    m.inputs["plan"] = a.plan;
  } else {
    rows = export_histograms(ClientPopulation(io::read_population_file(a.population)));
    m.inputs["population"] = a.population;
  }
  auto out = open_output(a.out);
  io::write_matrix_csv(out, rows, "p");
  out.close();
  m.config["rows"] = rows.size();
  m.outputs["histograms"] = a.out;
  write_manifest(a.out, m, common, argv);
  return kExitOk;
}

struct EvalArgs {
  std::string fitted;
  std::string trace_params;
  std::string truth;
  std::string population;
  std::string out;
};

int cmd_eval(const EvalArgs& a, const Common& common, Manifest& m,
             const std::vector<std::string>& argv) {
  if (a.fitted.empty() == a.trace_params.empty()) {
    throw ContractError("give exactly one of --fitted or --trace-params");
  }
  require_distinct({a.fitted, a.trace_params, a.truth, a.population}, {a.out});
  const MdmParams truth = io::read_params_file(a.truth);
  std::optional<ClientPopulation> pop;
  if (!a.population.empty()) pop.emplace(io::read_population_file(a.population));

  std::vector<std::pair<std::optional<std::size_t>, MdmParams>> rows;
  if (!a.fitted.empty()) {
    rows.emplace_back(std::nullopt, io::read_params_file(a.fitted));
    m.inputs["fitted"] = a.fitted;
  } else {
    std::ifstream in(a.trace_params);
    if (!in) throw DataError("cannot open " + a.trace_params);
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      try {
        const json doc = json::parse(line);
        rows.emplace_back(doc.at("round").get<std::size_t>(),
                          io::params_from_json(doc.at("params").dump()));
      } catch (const json::exception& e) {
        throw DataError("trace line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    m.inputs["trace_params"] = a.trace_params;
  }

  auto out = open_output(a.out);
  const bool traced = a.fitted.empty();
  if (traced) out << "round,";
  out << "nmse_tau,nmse_alpha,nmse_pi,permutation";
  if (pop) out << ",log_likelihood";
  out << '\n';
  for (const auto& [round, params] : rows) {
    const auto r = align_and_score(params, truth);
    if (traced) out << *round << ',';
    out << io::format_double(r.nmse_tau) << ',' << io::format_double(r.nmse_alpha) << ','
        << io::format_double(r.nmse_pi) << ',';
    for (std::size_t k = 0; k < r.permutation.size(); ++k) {
      out << (k ? " " : "") << r.permutation[k];
    }
    if (pop) {
      out << ',' << io::format_double(population_log_likelihood(*pop, params,
                                                                policy_of(common)));
    }
    out << '\n';
  }
  out.close();
  m.inputs["truth"] = a.truth;
  if (pop) m.inputs["population"] = a.population;
  m.outputs["scores"] = a.out;
  write_manifest(a.out, m, common, argv);
  return kExitOk;
}

void print_error(std::string_view kind, const std::string& message) {
  ordered_json doc;
  doc["error"] = std::string(kind);
  doc["message"] = message;
  std::cerr << doc.dump() << '\n';
}

}  // namespace

int run(int argc, const char* const* argv) {
  CLI::App app{"Learn and sample mixtures of Dirichlet-multinomials over federated clients",
               "fedmdm"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  Common common;
  Manifest manifest;

  GenArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-synthetic", "Draw a synthetic client population");
  add_common(gen_cmd, common, true);
  gen_cmd->add_option("--preset", gen.preset, "Embedded ground truth")
      ->check(CLI::IsMember(preset_names()));
  gen_cmd->add_option("--params", gen.params, "Ground-truth params JSON");
  gen_cmd->add_option("--clients", gen.clients, "Number of clients")->required();
  gen_cmd->add_option("--out", gen.out, "Population JSONL")->required();
  gen_cmd->add_option("--labels-out", gen.labels_out, "CSV of true component labels");
  gen_cmd->add_option("--truth-out", gen.truth_out, "Write the ground-truth params JSON");

  IngestArgs ingest;
  auto* ingest_cmd = app.add_subcommand("ingest", "Build client histograms from a record CSV");
  add_common(ingest_cmd, common, false);
  ingest_cmd->add_option("--input", ingest.input, "CSV with a feature column")->required();
  ingest_cmd->add_option("--binning", ingest.binning, "BinningSpec JSON");
  ingest_cmd->add_flag("--income", ingest.income, "Use the built-in income binning");
  ingest_cmd->add_option("--out", ingest.out, "Population JSONL")->required();
  ingest_cmd->add_option("--ids-out", ingest.ids_out, "CSV mapping client index to id");

  InferArgs infer;
  auto* infer_cmd = app.add_subcommand("infer", "Fit a mixture by federated EM");
  add_common(infer_cmd, common, true);
  infer_cmd->add_option("--population", infer.population, "Population JSONL")->required();
  infer_cmd->add_option("--k", infer.fit.K, "Number of components")
      ->check(CLI::PositiveNumber);
  add_fit_options(infer_cmd, infer.fit);
  infer_cmd->add_option("--out", infer.out, "Fitted params JSON")->required();
  infer_cmd->add_option("--trace", infer.trace, "Per-round trace CSV");
  infer_cmd->add_option("--trace-params", infer.trace_params,
                        "Per-round params snapshots as JSONL");
  infer_cmd->add_option("--truth", infer.truth, "Ground-truth params for trace NMSE");
  infer_cmd->add_flag("--trace-loglik", infer.trace_loglik,
                      "Record the population log likelihood every round");

  SelectArgs select;
  auto* select_cmd = app.add_subcommand("select-k", "Choose K by validation log likelihood");
  add_common(select_cmd, common, true);
  select_cmd->add_option("--population", select.population, "Population JSONL")->required();
  select_cmd->add_option("--candidates", select.candidates, "Candidate K values")
      ->delimiter(',')
      ->required();
  select_cmd->add_option("--validation", select.validation,
                         "Separate validation population JSONL");
  select_cmd->add_option("--val-cohort", select.val_cohort, "Validation cohort size");
  select_cmd->add_option("--tie-tolerance", select.tie_tolerance,
                         "Nats per client treated as a tie");
  add_fit_options(select_cmd, select.fit);
  select_cmd->add_option("--out", select.out, "Report JSON")->required();
  select_cmd->add_option("--csv", select.csv, "CSV of K and mean validation log likelihood");

  PartitionArgs part;
  auto* part_cmd = app.add_subcommand("partition", "Split a central dataset into simulated clients");
  add_common(part_cmd, common, true);
  part_cmd->add_option("--input", part.input, "Central record CSV")->required();
  part_cmd->add_option("--binning", part.binning, "BinningSpec JSON");
  part_cmd->add_flag("--income", part.income, "Use the built-in income binning");
  part_cmd->add_option("--generator", part.generator,
                       "mdm, fully_iid, or conditionally_iid. conditionally_iid is a "
                       "test-only oracle: it needs every true client's histogram")
      ->check(CLI::IsMember({"mdm", "fully_iid", "conditionally_iid"}));
  part_cmd->add_option("--params", part.params, "Fitted params JSON");
  part_cmd->add_option("--true-population", part.true_population,
                       "True population JSONL (test-only oracle input)");
  part_cmd->add_option("--clients", part.clients, "Number of simulated clients");
  part_cmd->add_option("--out", part.out, "Plan JSONL")->required();

  ExportArgs exp;
  auto* exp_cmd = app.add_subcommand("export-histograms", "Write normalized client histograms");
  add_common(exp_cmd, common, false);
  exp_cmd->add_option("--plan", exp.plan, "Plan JSONL");
  exp_cmd->add_option("--population", exp.population, "Population JSONL");
  exp_cmd->add_option("--out", exp.out, "CSV")->required();

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Score fitted params against ground truth");
  add_common(eval_cmd, common, false);
  eval_cmd->add_option("--fitted", ev.fitted, "Fitted params JSON");
  eval_cmd->add_option("--trace-params", ev.trace_params, "Params snapshots JSONL");
  eval_cmd->add_option("--truth", ev.truth, "Ground-truth params JSON")->required();
  eval_cmd->add_option("--population", ev.population,
                       "Population JSONL for a log likelihood column");
  eval_cmd->add_option("--out", ev.out, "CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    apply_kernels(common);
    auto* sub = app.get_subcommands().front();
    manifest.subcommand = sub->get_name();
    if (sub == gen_cmd) return cmd_gen(gen, common, manifest, args);
    if (sub == ingest_cmd) return cmd_ingest(ingest, common, manifest, args);
    if (sub == infer_cmd) return cmd_infer(infer, common, manifest, args);
    if (sub == select_cmd) return cmd_select(select, common, manifest, args);
    if (sub == part_cmd) return cmd_partition(part, common, manifest, args);
    if (sub == exp_cmd) return cmd_export(exp, common, manifest, args);
    return cmd_eval(ev, common, manifest, args);
  } catch (const NumericError& e) {
    print_error("numeric", e.what());
    return kExitNumeric;
  } catch (const DataError& e) {
    print_error("data", e.what());
    return kExitData;
  } catch (const PartitionError& e) {
    print_error("partition", e.what());
    return kExitData;
  } catch (const DegenerateClientError& e) {
    print_error("degenerate_client", e.what());
    return kExitData;
  } catch (const ContractError& e) {
    print_error("contract", e.what());
    return kExitUsage;
  } catch (const DomainError& e) {
    print_error("domain", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    print_error("internal", e.what());
    return kExitData;
  }
}

}  // namespace fedmdm::cli
