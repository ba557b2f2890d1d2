#pragma once

// File formats: params JSON, population JSONL, plan JSONL, histogram and
// report CSV. Doubles are written with 17 significant digits so every value
// round-trips exactly.

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "fedmdm/ingestion.hpp"
#include "fedmdm/mdm_model.hpp"
#include "fedmdm/model_selection.hpp"
#include "fedmdm/partitioner.hpp"

namespace fedmdm::io {

std::string format_double(double x);

/// {"K":..,"C":..,"N":..,"tau":[..],"alpha":[[..]..],"pi":[[{"n":..,"p":..}..]..]}
std::string params_to_json(const MdmParams& params);
/// Throws DataError on malformed JSON or parameters violating invariants.
MdmParams params_from_json(const std::string& text);

MdmParams read_params_file(const std::string& path);
void write_params_file(const std::string& path, const MdmParams& params);

/// One {"c":[..],"n":..} object per line.
std::string record_to_json(const ClientRecord& rec);
std::vector<ClientRecord> read_population_jsonl(std::istream& in);
std::vector<ClientRecord> read_population_file(const std::string& path);
void write_population_jsonl(std::ostream& out,
                            std::span<const ClientRecord> records);
void write_population_file(const std::string& path,
                           std::span<const ClientRecord> records);

/// {"mode":"categorical","vocabulary":[..]} or
/// {"mode":"fixed_width","lower":..,"width":..,"bins":..}
BinningSpec binning_from_json(const std::string& text);
BinningSpec read_binning_file(const std::string& path);

/// One simulated client per line:
/// {"target_c":[..],"rows":{"l":[..]},"replacement":{"l":bool}}
void write_plan_jsonl(std::ostream& out, const PartitionPlan& plan);
std::vector<SimulatedClient> read_plan_jsonl(std::istream& in);

void write_matrix_csv(std::ostream& out,
                      const std::vector<std::vector<double>>& rows,
                      const std::string& column_prefix);

std::string selection_report_to_json(const KSelectionReport& report);
void write_selection_csv(std::ostream& out, const KSelectionReport& report);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace fedmdm::io
