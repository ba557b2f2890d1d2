#pragma once

// Embedded ground-truth parameter sets for synthetic experiments.
//
//   appendixA         K=3, C=5, every component's sample count fixed at 100
//   table1:<h>-<k>    h in {low, medium, high}, k in {1, 2, 3}; C=10, sample
//                     count fixed at 100
//
// table1:low-3 lists three weights but only two Dirichlet rows in its
// source table; the missing middle row is filled with the all-ones row of
// table1:low-1.

#include <string>
#include <string_view>
#include <vector>

#include "fedmdm/mdm_model.hpp"

namespace fedmdm {

inline constexpr std::int64_t kPresetSampleCount = 100;

std::vector<std::string> preset_names();

/// Throws ContractError for an unknown name.
MdmParams preset(std::string_view name);

}  // namespace fedmdm
