#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>

#include <json.hpp>

#include "fedmdm/cli.hpp"
#include "fedmdm/io.hpp"
#include "fedmdm/presets.hpp"

namespace fs = std::filesystem;
using namespace fedmdm;

namespace {

struct Sandbox {
  fs::path dir;
  Sandbox() {
    dir = fs::temp_directory_path() / ("fedmdm_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir);
  }
  ~Sandbox() { fs::remove_all(dir); }
  std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

int run(const std::string& args) {
  const std::string cmd = std::string(FEDMDM_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const std::string& path) { return io::read_text_file(path); }

std::vector<std::string> lines(const std::string& path) {
  std::istringstream in(slurp(path));
  std::vector<std::string> out;
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

}  // namespace

TEST_CASE("embedded ground truths match the transcribed parameter table") {
  using Rows = std::vector<std::vector<double>>;
  const std::vector<double> ones(10, 1.0), half(10, 0.5), wide(10, 2.5);
  const std::vector<double> mA{0.1, 0.2, 0.6, 1.0, 2.0, 0.1, 1.0, 2.0, 0.5, 0.5};
  const std::vector<double> mB{2.5, 2.6, 2.7, 2.8, 3.0, 2.5, 2.0, 3.0, 1.0, 0.9};
  const std::vector<double> mC{5.0, 4.0, 5.0, 1.0, 1.0, 1.0, 5.0, 4.0, 5.0, 1.0};
  const std::vector<double> hA{0.1, 0.2, 0.15, 0.18, 0.1, 0.05, 0.08, 0.4, 0.2, 0.12};
  const std::vector<double> hB{2.5, 2.6, 2.0, 3.2, 1.5, 0.9, 0.8, 1.3, 3.1, 2.4};
  const std::vector<double> hC{5.0, 5.0, 0.2, 0.2, 3.1, 3.0, 3.2, 0.8, 0.9, 5.0};
  const std::vector<std::tuple<std::string, std::vector<double>, Rows>> table{
      {"table1:low-1", {1.0}, {ones}},
      {"table1:low-2", {0.5, 0.5}, {half, wide}},
      {"table1:low-3", {0.333, 0.334, 0.333}, {wide, ones, half}},
      {"table1:medium-1", {1.0}, {mA}},
      {"table1:medium-2", {0.4, 0.6}, {mA, mB}},
      {"table1:medium-3", {0.5, 0.2, 0.3}, {mC, mA, mB}},
      {"table1:high-1", {1.0}, {hA}},
      {"table1:high-2", {0.1, 0.9}, {hA, hB}},
      {"table1:high-3", {0.8, 0.05, 0.15}, {hC, hA, hB}},
  };
  Sandbox box;
  for (const auto& [name, tau, alpha] : table) {
    INFO(name);
    REQUIRE(run("gen-synthetic --preset " + name + " --clients 3 --seed 1 --out " + box / "p.jsonl" +
                " --truth-out " + box / "t.json") == 0);
    const MdmParams p = io::read_params_file(box / "t.json");
    CHECK(std::vector<double>(p.tau().begin(), p.tau().end()) == tau);
    for (std::size_t k = 0; k < p.K(); ++k) {
      CHECK(std::vector<double>(p.alpha(k).begin(), p.alpha(k).end()) == alpha[k]);
      CHECK(p.pi(k) == SampleCountDist{{100, 1.0}});
    }
  }
}

TEST_CASE("synthetic pipeline: generate, fit, evaluate") {
  Sandbox box;
  const std::string pop = box / "pop.jsonl", truth = box / "truth.json";
  REQUIRE(run("gen-synthetic --preset appendixA --clients 200 --seed 5 --out " + pop +
              " --truth-out " + truth + " --labels-out " + box / "labels.csv") == 0);
  CHECK(lines(pop).size() == 200);
  CHECK(lines(box / "labels.csv").size() == 201);

  // Zero rounds returns the initialization, which the trace records as round 0.
  REQUIRE(run("infer --population " + pop + " --k 3 --rounds 0 --seed 9 --out " + box / "f0.json" +
              " --trace-params " + box / "f0.jsonl") == 0);
  const auto snaps = lines(box / "f0.jsonl");
  REQUIRE(snaps.size() == 1);
  const auto snap = nlohmann::json::parse(snaps[0]);
  CHECK(snap["round"] == 0);
  CHECK(io::params_from_json(snap["params"].dump()) == io::read_params_file(box / "f0.json"));

  const std::string fit_args = "infer --population " + pop + " --k 3 --rounds 5 --seed 9 --trace-loglik";
  REQUIRE(run(fit_args + " --out " + box / "a.json" + " --trace " + box / "a.csv" +
              " --truth " + truth) == 0);
  REQUIRE(run(fit_args + " --threads 4 --out " + box / "b.json" + " --trace " + box / "b.csv" +
              " --truth " + truth) == 0);
  CHECK(slurp(box / "a.json") == slurp(box / "b.json"));
  CHECK(slurp(box / "a.csv") == slurp(box / "b.csv"));
  const auto trace = lines(box / "a.csv");
  CHECK(trace.size() == 7);
  CHECK(trace[0] == "round,clients_seen,log_likelihood,nmse_tau,nmse_alpha,nmse_pi");

  const auto manifest = nlohmann::json::parse(slurp(box / "a.json.manifest.json"));
  CHECK(manifest["subcommand"] == "infer");
  CHECK(manifest["seed"] == 9);
  CHECK(manifest["version"] == std::string(cli::kVersion));
  CHECK(manifest["inputs"]["population"] == pop);

  REQUIRE(run("eval --fitted " + truth + " --truth " + truth + " --out " + box / "e.csv") == 0);
  const auto ev = lines(box / "e.csv");
  REQUIRE(ev.size() == 2);
  CHECK(ev[1].rfind("0,0,0,", 0) == 0);
}

TEST_CASE("ingest, partition and export") {
  Sandbox box;
  {
    std::ofstream csv(box / "rows.csv");
    csv << "client_id,feature\n";
    for (int i = 0; i < 60; ++i) csv << "u" << i % 6 << ',' << (i * 7919) % 260000 << '\n';
  }
  REQUIRE(run("ingest --input " + box / "rows.csv" + " --income --out " + box / "pop.jsonl") == 0);
  CHECK(lines(box / "pop.jsonl").size() == 6);
  REQUIRE(run("infer --population " + box / "pop.jsonl" + " --k 1 --rounds 3 --seed 1 --out " +
              box / "fit.json") == 0);
  REQUIRE(run("partition --input " + box / "rows.csv" + " --income --generator mdm --params " +
              box / "fit.json" + " --clients 4 --seed 2 --out " + box / "plan.jsonl") == 0);
  CHECK(lines(box / "plan.jsonl").size() == 4);
  REQUIRE(run("partition --input " + box / "rows.csv" +
              " --income --generator conditionally_iid --true-population " + box / "pop.jsonl" +
              " --seed 2 --out " + box / "cplan.jsonl") == 0);
  CHECK(lines(box / "cplan.jsonl").size() == 6);
  REQUIRE(run("export-histograms --plan " + box / "plan.jsonl" + " --out " + box / "h.csv") == 0);
  CHECK(lines(box / "h.csv").size() == 5);
}

TEST_CASE("exit codes") {
  Sandbox box;
  CHECK(run("") == cli::kExitUsage);
  CHECK(run("infer --population x.jsonl") == cli::kExitUsage);
  CHECK(run("gen-synthetic --preset nope --clients 3 --seed 1 --out " + box / "p.jsonl") ==
        cli::kExitUsage);
  CHECK(run("infer --population " + box / "missing.jsonl" + " --k 2 --seed 1 --out " +
            box / "f.json") == cli::kExitData);
  {
    std::ofstream bad(box / "bad.jsonl");
    bad << "{\"c\":[1,1],\"n\":5}\n";
  }
  CHECK(run("infer --population " + box / "bad.jsonl" + " --k 1 --seed 1 --out " + box / "f.json") ==
        cli::kExitData);
  REQUIRE(run("gen-synthetic --preset table1:low-2 --clients 10 --seed 1 --out " + box / "p.jsonl") == 0);
  CHECK(run("infer --population " + box / "p.jsonl" + " --k 2 --seed 1 --out " + box / "p.jsonl") ==
        cli::kExitUsage);
  CHECK(run("infer --population " + box / "p.jsonl" + " --k 2 --seed 1 --degenerate error --out " +
            box / "f.json") == cli::kExitOk);
  CHECK(run("--version") == cli::kExitOk);
}
