#pragma once

// Record-level data to client histograms and central pools.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "fedmdm/federation.hpp"

namespace fedmdm {

struct TableRow {
  std::optional<std::string> client_id;
  std::string feature;
  std::size_t row_index = 0;
};

/// Rows of a record-level dataset. Row indices are unique and stable: the
/// zero-based data-row position in the source file.
struct RecordTable {
  std::vector<TableRow> rows;
};

/// CSV with a header row containing `feature` and optionally `client_id`;
/// other columns are ignored. Double-quoted fields are supported. Throws
/// DataError on a malformed file or a row with an empty feature value.
RecordTable read_record_csv(std::istream& in);
RecordTable read_record_csv_file(const std::string& path);

struct BinningSpec {
  enum class Mode { categorical, fixed_width };

  Mode mode = Mode::categorical;
  std::vector<std::string> vocabulary;  // categorical
  double lower = 0.0;                   // fixed_width
  double width = 0.0;                   // fixed_width
  std::size_t bins = 0;                 // fixed_width; last bin open-ended

  std::size_t categories() const;
  /// Throws ContractError on an unusable spec.
  void validate() const;
};

/// Income binning: [0, 5000), [5000, 10000), ..., [195000, 200000),
/// [200000, inf); 41 bins.
BinningSpec income_binning();

/// min(floor((x - lower) / width), bins - 1) over semi-closed intervals
/// [a, b). Throws DomainError for x below `lower` or non-finite x.
std::size_t bin_value(double x, const BinningSpec& spec);

/// Category index of a raw feature token. Throws ContractError naming the
/// token when it is not in a categorical vocabulary, DataError when a
/// fixed-width token is not a number.
std::size_t categorize(const std::string& token, const BinningSpec& spec);

/// One ClientRecord per distinct client id, in order of first appearance.
/// Throws ContractError on an empty table or a row without a client id.
ClientPopulation build_clients(const RecordTable& table, const BinningSpec& spec,
                               std::vector<std::string>* client_ids = nullptr);

struct CentralPool {
  /// Row indices per category.
  std::vector<std::vector<std::size_t>> buckets;
  std::vector<std::int64_t> marginal;

  std::size_t categories() const { return buckets.size(); }
  std::size_t total_rows() const;
};

/// Groups rows by category, ignoring client ids.
CentralPool build_central_pool(const RecordTable& table, const BinningSpec& spec);

}  // namespace fedmdm
