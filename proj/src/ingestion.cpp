#include "fedmdm/ingestion.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <unordered_map>

#include "fedmdm/errors.hpp"

namespace fedmdm {
namespace {

std::vector<std::string> split_csv_line(const std::string& line,
                                        std::size_t line_no) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(ch);
    }
  }
  if (quoted) {
    throw DataError("line " + std::to_string(line_no) + ": unterminated quote");
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string trim(std::string s) {
  auto not_space = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), not_space));
  s.erase(std::find_if(s.rbegin(), s.rend(), not_space).base(), s.end());
  return s;
}

}  // namespace

RecordTable read_record_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) throw DataError("CSV input is empty");
  ++line_no;
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line, line_no);
  std::optional<std::size_t> feature_col;
  std::optional<std::size_t> client_col;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const std::string name = trim(header[c]);
    if (name == "feature") feature_col = c;
    if (name == "client_id") client_col = c;
  }
  if (!feature_col) throw DataError("CSV header has no 'feature' column");

  RecordTable table;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_csv_line(line, line_no);
    if (fields.size() != header.size()) {
      throw DataError("line " + std::to_string(line_no) + ": expected " +
                      std::to_string(header.size()) + " fields, got " +
                      std::to_string(fields.size()));
    }
    TableRow row;
    row.feature = trim(fields[*feature_col]);
    if (row.feature.empty()) {
      throw DataError("line " + std::to_string(line_no) + ": missing feature value");
    }
    if (client_col) {
      std::string id = trim(fields[*client_col]);
      if (!id.empty()) row.client_id = std::move(id);
    }
    row.row_index = table.rows.size();
    table.rows.push_back(std::move(row));
  }
  return table;
}

RecordTable read_record_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return read_record_csv(in);
}

std::size_t BinningSpec::categories() const {
  return mode == Mode::categorical ? vocabulary.size() : bins;
}

void BinningSpec::validate() const {
  if (mode == Mode::categorical) {
    if (vocabulary.empty()) {
      throw ContractError("categorical binning needs a non-empty vocabulary");
    }
    std::vector<std::string> sorted = vocabulary;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw ContractError("categorical vocabulary has duplicate tokens");
    }
  } else {
    if (!(width > 0.0) || !std::isfinite(width)) {
      throw ContractError("fixed-width binning needs width > 0");
    }
    if (!std::isfinite(lower)) throw ContractError("fixed-width lower bound must be finite");
    if (bins < 2) throw ContractError("fixed-width binning needs at least 2 bins");
  }
}

BinningSpec income_binning() {
  BinningSpec spec;
  spec.mode = BinningSpec::Mode::fixed_width;
  spec.lower = 0.0;
  spec.width = 5000.0;
  spec.bins = 41;
  return spec;
}

std::size_t bin_value(double x, const BinningSpec& spec) {
  if (spec.mode != BinningSpec::Mode::fixed_width) {
    throw ContractError("bin_value needs a fixed-width spec");
  }
  if (!std::isfinite(x)) throw DomainError("bin_value: non-finite value");
  if (x < spec.lower) {
    throw DomainError("bin_value: " + std::to_string(x) + " is below the lower bound " +
                      std::to_string(spec.lower));
  }
  const double slot = std::floor((x - spec.lower) / spec.width);
  const double last = static_cast<double>(spec.bins - 1);
  return static_cast<std::size_t>(std::min(slot, last));
}

std::size_t categorize(const std::string& token, const BinningSpec& spec) {
  if (spec.mode == BinningSpec::Mode::categorical) {
    auto it = std::find(spec.vocabulary.begin(), spec.vocabulary.end(), token);
    if (it == spec.vocabulary.end()) {
      throw ContractError("unknown category token '" + token + "'");
    }
    return static_cast<std::size_t>(it - spec.vocabulary.begin());
  }
  double x = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, x);
  if (ec != std::errc() || ptr != last) {
    throw DataError("feature value '" + token + "' is not a number");
  }
  return bin_value(x, spec);
}

ClientPopulation build_clients(const RecordTable& table, const BinningSpec& spec,
                               std::vector<std::string>* client_ids) {
  spec.validate();
  if (table.rows.empty()) throw ContractError("build_clients: empty table");
  const std::size_t C = spec.categories();
  std::unordered_map<std::string, std::size_t> slot_of;
  std::vector<std::string> ids;
  std::vector<ClientRecord> records;
  for (const auto& row : table.rows) {
    if (!row.client_id) {
      throw ContractError("build_clients: row " + std::to_string(row.row_index) +
                          " has no client id");
    }
    auto [it, inserted] = slot_of.try_emplace(*row.client_id, records.size());
    if (inserted) {
      ids.push_back(*row.client_id);
      records.push_back(ClientRecord{std::vector<std::int64_t>(C, 0), 0});
    }
    ClientRecord& rec = records[it->second];
    ++rec.counts[categorize(row.feature, spec)];
    ++rec.n;
  }
  if (client_ids) *client_ids = std::move(ids);
  return ClientPopulation(std::move(records));
}

std::size_t CentralPool::total_rows() const {
  std::size_t total = 0;
  for (const auto& b : buckets) total += b.size();
  return total;
}

CentralPool build_central_pool(const RecordTable& table, const BinningSpec& spec) {
  spec.validate();
  CentralPool pool;
  pool.buckets.resize(spec.categories());
  pool.marginal.assign(spec.categories(), 0);
  for (const auto& row : table.rows) {
    const std::size_t l = categorize(row.feature, spec);
    pool.buckets[l].push_back(row.row_index);
    ++pool.marginal[l];
  }
  return pool;
}

}  // namespace fedmdm
