#include "fedmdm/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fedmdm/errors.hpp"

namespace fedmdm::io {
namespace {

using nlohmann::json;

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw DataError("malformed " + what + ": " + e.what());
  }
}

template <class T>
T field(const json& obj, const char* key, const std::string& what) {
  if (!obj.is_object() || !obj.contains(key)) {
    throw DataError(what + ": missing field '" + key + "'");
  }
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw DataError(what + ": bad field '" + key + "': " + e.what());
  }
}

void append_array(std::string& out, std::span<const double> values) {
  out.push_back('[');
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out.push_back(',');
    out += format_double(values[i]);
  }
  out.push_back(']');
}

template <class Int>
void append_int_array(std::string& out, std::span<const Int> values) {
  out.push_back('[');
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out.push_back(',');
    out += std::to_string(values[i]);
  }
  out.push_back(']');
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  return in;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path);
  return out;
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "NaN";
  if (std::isinf(x)) return x > 0 ? "Infinity" : "-Infinity";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string params_to_json(const MdmParams& params) {
  std::string out = "{\"K\":" + std::to_string(params.K()) +
                    ",\"C\":" + std::to_string(params.C()) +
                    ",\"N\":" + std::to_string(params.N()) + ",\"tau\":";
  append_array(out, params.tau());
  out += ",\"alpha\":[";
  for (std::size_t k = 0; k < params.K(); ++k) {
    if (k) out.push_back(',');
    append_array(out, params.alpha(k));
  }
  out += "],\"pi\":[";
  for (std::size_t k = 0; k < params.K(); ++k) {
    if (k) out.push_back(',');
    out.push_back('[');
    bool first = true;
    for (const auto& [n, p] : params.pi(k)) {
      if (!first) out.push_back(',');
      first = false;
      out += "{\"n\":" + std::to_string(n) + ",\"p\":" + format_double(p) + "}";
    }
    out.push_back(']');
  }
  out += "]}";
  return out;
}

MdmParams params_from_json(const std::string& text) {
  const std::string what = "params JSON";
  const json doc = parse_json(text, what);
  const auto K = field<std::size_t>(doc, "K", what);
  const auto C = field<std::size_t>(doc, "C", what);
  const auto N = field<std::int64_t>(doc, "N", what);
  auto tau = field<std::vector<double>>(doc, "tau", what);
  auto alpha = field<std::vector<std::vector<double>>>(doc, "alpha", what);
  const json& pi_doc = doc.at("pi");
  if (!pi_doc.is_array()) throw DataError(what + ": 'pi' must be an array");
  std::vector<SampleCountDist> pi;
  for (const auto& comp : pi_doc) {
    if (!comp.is_array()) throw DataError(what + ": each pi entry must be an array");
    SampleCountDist dist;
    for (const auto& point : comp) {
      dist[field<std::int64_t>(point, "n", what)] = field<double>(point, "p", what);
    }
    pi.push_back(std::move(dist));
  }
  if (tau.size() != K || alpha.size() != K || pi.size() != K) {
    throw DataError(what + ": K does not match the tau/alpha/pi lengths");
  }
  for (const auto& row : alpha) {
    if (row.size() != C) throw DataError(what + ": alpha rows must have C entries");
  }
  try {
    return MdmParams(std::move(tau), std::move(alpha), std::move(pi), N);
  } catch (const ContractError& e) {
    throw DataError(what + ": " + e.what());
  }
}

MdmParams read_params_file(const std::string& path) {
  return params_from_json(read_text_file(path));
}

void write_params_file(const std::string& path, const MdmParams& params) {
  write_text_file(path, params_to_json(params) + "\n");
}

std::string record_to_json(const ClientRecord& rec) {
  std::string out = "{\"c\":";
  append_int_array<std::int64_t>(out, rec.counts);
  out += ",\"n\":" + std::to_string(rec.n) + "}";
  return out;
}

std::vector<ClientRecord> read_population_jsonl(std::istream& in) {
  std::vector<ClientRecord> records;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string what = "population line " + std::to_string(line_no);
    const json doc = parse_json(line, what);
    ClientRecord rec;
    rec.counts = field<std::vector<std::int64_t>>(doc, "c", what);
    rec.n = field<std::int64_t>(doc, "n", what);
    try {
      rec.validate();
    } catch (const ContractError& e) {
      throw DataError(what + ": " + e.what());
    }
    records.push_back(std::move(rec));
  }
  if (records.empty()) throw DataError("population file has no records");
  return records;
}

std::vector<ClientRecord> read_population_file(const std::string& path) {
  auto in = open_in(path);
  return read_population_jsonl(in);
}

void write_population_jsonl(std::ostream& out,
                            std::span<const ClientRecord> records) {
  for (const auto& rec : records) out << record_to_json(rec) << '\n';
}

void write_population_file(const std::string& path,
                           std::span<const ClientRecord> records) {
  auto out = open_out(path);
  write_population_jsonl(out, records);
}

BinningSpec binning_from_json(const std::string& text) {
  const std::string what = "binning spec";
  const json doc = parse_json(text, what);
  const auto mode = field<std::string>(doc, "mode", what);
  BinningSpec spec;
  if (mode == "categorical") {
    spec.mode = BinningSpec::Mode::categorical;
    spec.vocabulary = field<std::vector<std::string>>(doc, "vocabulary", what);
  } else if (mode == "fixed_width") {
    spec.mode = BinningSpec::Mode::fixed_width;
    spec.lower = field<double>(doc, "lower", what);
    spec.width = field<double>(doc, "width", what);
    spec.bins = field<std::size_t>(doc, "bins", what);
  } else {
    throw DataError(what + ": unknown mode '" + mode + "'");
  }
  try {
    spec.validate();
  } catch (const ContractError& e) {
    throw DataError(what + ": " + e.what());
  }
  return spec;
}

BinningSpec read_binning_file(const std::string& path) {
  return binning_from_json(read_text_file(path));
}

void write_plan_jsonl(std::ostream& out, const PartitionPlan& plan) {
  for (const auto& client : plan.clients) {
    std::string line = "{\"target_c\":";
    append_int_array<std::int64_t>(line, client.target);
    line += ",\"rows\":{";
    bool first = true;
    for (const auto& [l, rows] : client.rows) {
      if (!first) line.push_back(',');
      first = false;
      line += "\"" + std::to_string(l) + "\":";
      append_int_array<std::size_t>(line, rows);
    }
    line += "},\"replacement\":{";
    first = true;
    for (const auto& [l, flag] : client.replacement) {
      if (!first) line.push_back(',');
      first = false;
      line += "\"" + std::to_string(l) + "\":" + (flag ? "true" : "false");
    }
    line += "}}";
    out << line << '\n';
  }
}

std::vector<SimulatedClient> read_plan_jsonl(std::istream& in) {
  std::vector<SimulatedClient> clients;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string what = "plan line " + std::to_string(line_no);
    const json doc = parse_json(line, what);
    SimulatedClient client;
    client.target = field<std::vector<std::int64_t>>(doc, "target_c", what);
    try {
      for (const auto& [key, rows] : doc.at("rows").items()) {
        client.rows[std::stoul(key)] = rows.get<std::vector<std::size_t>>();
      }
      for (const auto& [key, flag] : doc.at("replacement").items()) {
        client.replacement[std::stoul(key)] = flag.get<bool>();
      }
    } catch (const std::exception& e) {
      throw DataError(what + ": " + e.what());
    }
    clients.push_back(std::move(client));
  }
  return clients;
}

void write_matrix_csv(std::ostream& out,
                      const std::vector<std::vector<double>>& rows,
                      const std::string& column_prefix) {
  const std::size_t width = rows.empty() ? 0 : rows.front().size();
  for (std::size_t j = 0; j < width; ++j) {
    if (j) out << ',';
    out << column_prefix << j;
  }
  out << '\n';
  for (const auto& row : rows) {
    for (std::size_t j = 0; j < row.size(); ++j) {
      if (j) out << ',';
      out << format_double(row[j]);
    }
    out << '\n';
  }
}

std::string selection_report_to_json(const KSelectionReport& report) {
  std::string out = "{\"chosen_K\":" + std::to_string(report.chosen_K) +
                    ",\"tie_tolerance\":" + format_double(report.tie_tolerance) +
                    ",\"validation_cohort_size\":" +
                    std::to_string(report.validation_cohort.size()) +
                    ",\"external_validation\":" +
                    (report.external_validation ? "true" : "false") +
                    ",\"candidates\":[";
  for (std::size_t i = 0; i < report.candidates.size(); ++i) {
    const auto& c = report.candidates[i];
    if (i) out.push_back(',');
    out += "{\"K\":" + std::to_string(c.K) +
           ",\"mean_val_loglik\":" + format_double(c.mean_val_loglik) +
           ",\"params\":" + params_to_json(c.params) + "}";
  }
  out += "]}";
  return out;
}

void write_selection_csv(std::ostream& out, const KSelectionReport& report) {
  out << "K,mean_val_loglik\n";
  for (const auto& c : report.candidates) {
    out << c.K << ',' << format_double(c.mean_val_loglik) << '\n';
  }
}

std::string read_text_file(const std::string& path) {
  auto in = open_in(path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text_file(const std::string& path, const std::string& text) {
  auto out = open_out(path);
  out << text;
  if (!out) throw DataError("failed writing " + path);
}

}  // namespace fedmdm::io
