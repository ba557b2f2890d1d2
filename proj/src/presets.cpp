#include "fedmdm/presets.hpp"

#include <map>
#include <string>

#include "fedmdm/errors.hpp"

namespace fedmdm {
namespace {

struct PresetData {
  std::vector<double> tau;
  std::vector<std::vector<double>> alpha;
};

using Row = std::vector<double>;

const Row kLowOnes = {1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
const Row kLowHalf = {0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5};
const Row kLowWide = {2.5, 2.5, 2.5, 2.5, 2.5, 2.5, 2.5, 2.5, 2.5, 2.5};
const Row kMediumA = {0.1, 0.2, 0.6, 1.0, 2.0, 0.1, 1.0, 2.0, 0.5, 0.5};
const Row kMediumB = {2.5, 2.6, 2.7, 2.8, 3.0, 2.5, 2.0, 3.0, 1.0, 0.9};
const Row kMediumC = {5.0, 4.0, 5.0, 1.0, 1.0, 1.0, 5.0, 4.0, 5.0, 1.0};
const Row kHighA = {0.1, 0.2, 0.15, 0.18, 0.1, 0.05, 0.08, 0.4, 0.2, 0.12};
const Row kHighB = {2.5, 2.6, 2.0, 3.2, 1.5, 0.9, 0.8, 1.3, 3.1, 2.4};
const Row kHighC = {5.0, 5.0, 0.2, 0.2, 3.1, 3.0, 3.2, 0.8, 0.9, 5.0};

const std::map<std::string, PresetData, std::less<>>& table() {
  static const std::map<std::string, PresetData, std::less<>> presets = {
      {"appendixA",
       {{0.2, 0.5, 0.3},
        {{0.1, 0.2, 0.1, 0.3, 0.1}, {1.0, 4.0, 1.0, 2.0, 0.5}, {10.0, 5.0, 3.0, 2.0, 30.0}}}},
      {"table1:low-1", {{1.0}, {kLowOnes}}},
      {"table1:low-2", {{0.5, 0.5}, {kLowHalf, kLowWide}}},
      {"table1:low-3", {{0.333, 0.334, 0.333}, {kLowWide, kLowOnes, kLowHalf}}},
      {"table1:medium-1", {{1.0}, {kMediumA}}},
      {"table1:medium-2", {{0.4, 0.6}, {kMediumA, kMediumB}}},
      {"table1:medium-3", {{0.5, 0.2, 0.3}, {kMediumC, kMediumA, kMediumB}}},
      {"table1:high-1", {{1.0}, {kHighA}}},
      {"table1:high-2", {{0.1, 0.9}, {kHighA, kHighB}}},
      {"table1:high-3", {{0.8, 0.05, 0.15}, {kHighC, kHighA, kHighB}}},
  };
  return presets;
}

}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> names;
  for (const auto& [name, data] : table()) names.push_back(name);
  return names;
}

MdmParams preset(std::string_view name) {
  const auto& presets = table();
  auto it = presets.find(name);
  if (it == presets.end()) {
    throw ContractError("unknown preset '" + std::string(name) + "'");
  }
  const PresetData& data = it->second;
  std::vector<SampleCountDist> pi(data.tau.size(),
                                  SampleCountDist{{kPresetSampleCount, 1.0}});
  return MdmParams(data.tau, data.alpha, std::move(pi), kPresetSampleCount);
}

}  // namespace fedmdm
