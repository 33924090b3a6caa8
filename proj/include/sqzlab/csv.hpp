#pragma once

#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "sqzlab/data_series.hpp"
#include "sqzlab/errors.hpp"
#include "sqzlab/locksim.hpp"

namespace sqzlab {

// Headered CSV, UTF-8, '.' decimal. Doubles are written with the shortest
// representation that round-trips exactly, so parse(emit(x)) == x and equal
// runs emit byte-identical files.

inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view field, std::size_t line, std::size_t column) {
  double v = 0.0;
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc{} || res.ptr != end)
    throw csv_error("csv: malformed number '" + std::string(field) + "' at line " +
                        std::to_string(line) + ", column " + std::to_string(column),
                    line, column);
  return v;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  std::size_t column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
      if (header[i] == name) return i;
    throw csv_error("csv: missing column '" + std::string(name) + "'", 1, 1);
  }
  bool has_column(std::string_view name) const {
    for (const auto& h : header)
      if (h == name) return true;
    return false;
  }
};

inline CsvTable parse_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      fields.push_back(line.substr(start, comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (line_no == 1) {
      table.header = fields;
      continue;
    }
    if (fields.size() != table.header.size())
      throw csv_error("csv: expected " + std::to_string(table.header.size()) +
                          " fields, got " + std::to_string(fields.size()) + " at line " +
                          std::to_string(line_no),
                      line_no, fields.size());
    std::vector<double> row(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c)
      row[c] = parse_double(fields[c], line_no, c + 1);
    table.rows.push_back(std::move(row));
  }
  if (table.header.empty()) throw csv_error("csv: empty file", 1, 1);
  return table;
}

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw csv_error("csv: cannot open " + path, 0, 0);
  return parse_csv(in);
}

inline void write_csv(std::ostream& out, const CsvTable& table) {
  for (std::size_t i = 0; i < table.header.size(); ++i)
    out << (i ? "," : "") << table.header[i];
  out << "\n";
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i)
      out << (i ? "," : "") << format_double(row[i]);
    out << "\n";
  }
}

inline void write_csv(const std::string& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw csv_error("csv: cannot write " + path, 0, 0);
  write_csv(out, table);
}

// Column layouts for the four measurement kinds. The last sigma column is
// optional on input.

struct GainData {
  DataSeries amp;
  DataSeries deamp;
};

inline GainData read_gain_csv(const std::string& path) {
  const auto t = read_csv(path);
  const auto cp = t.column("power_w");
  const auto ca = t.column("gain_amp");
  const auto cd = t.column("gain_deamp");
  const bool with_sigma = t.has_column("sigma");
  GainData out;
  for (const auto& row : t.rows) {
    out.amp.x.push_back(row[cp]);
    out.amp.y.push_back(row[ca]);
    out.deamp.x.push_back(row[cp]);
    out.deamp.y.push_back(row[cd]);
    if (with_sigma) {
      out.amp.sigma.push_back(row[t.column("sigma")]);
      out.deamp.sigma.push_back(row[t.column("sigma")]);
    }
  }
  return out;
}

struct PairData {
  DataSeries sq;
  DataSeries asq;
};

inline PairData read_pair_csv(const std::string& path, std::string_view x_name) {
  const auto t = read_csv(path);
  const auto cx = t.column(x_name);
  const auto cs = t.column("sq_db");
  const auto ca = t.column("asq_db");
  const bool with_sigma = t.has_column("sigma_db");
  PairData out;
  for (const auto& row : t.rows) {
    out.sq.x.push_back(row[cx]);
    out.sq.y.push_back(row[cs]);
    out.asq.x.push_back(row[cx]);
    out.asq.y.push_back(row[ca]);
    if (with_sigma) {
      out.sq.sigma.push_back(row[t.column("sigma_db")]);
      out.asq.sigma.push_back(row[t.column("sigma_db")]);
    }
  }
  return out;
}

inline DataSeries read_shift_csv(const std::string& path) {
  const auto t = read_csv(path);
  const auto cp = t.column("power_w");
  const auto cs = t.column("shift_hz");
  const bool with_sigma = t.has_column("sigma_hz");
  DataSeries out;
  for (const auto& row : t.rows) {
    out.x.push_back(row[cp]);
    out.y.push_back(row[cs]);
    if (with_sigma) out.sigma.push_back(row[t.column("sigma_hz")]);
  }
  return out;
}

inline CsvTable trace_table(const SimTrace& trace) {
  CsvTable t;
  t.header = {"t", "detuning_hz", "error", "control", "coupling", "locked"};
  t.rows.reserve(trace.time_s.size());
  for (std::size_t i = 0; i < trace.time_s.size(); ++i)
    t.rows.push_back({trace.time_s[i], trace.detuning_hz[i], trace.error[i], trace.control[i],
                      trace.coupling[i], static_cast<double>(trace.locked[i])});
  return t;
}

inline CsvTable series_table(const DataSeries& series, std::string_view x_name,
                             std::string_view y_name) {
  CsvTable t;
  t.header = {std::string(x_name), std::string(y_name)};
  t.rows.reserve(series.size());
  for (std::size_t i = 0; i < series.size(); ++i) t.rows.push_back({series.x[i], series.y[i]});
  return t;
}

}  // namespace sqzlab
