#pragma once

// Command-line front end. Subcommands:
//   gen-synthetic, ingest, infer, select-k, partition, export-histograms, eval
// Every run writes <primary output>.manifest.json next to its outputs.

#include <string_view>

namespace fedmdm::cli {

inline constexpr std::string_view kVersion = "0.1.0";

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitNumeric = 3;

int run(int argc, const char* const* argv);

}  // namespace fedmdm::cli
