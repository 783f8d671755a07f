#pragma once

#include <cerrno>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "kmlearn/errors.hpp"

namespace kmlearn {

/// One converged optimization outcome.
struct RunRecord {
  std::uint64_t seed = 0;
  double lambda = 0.0;
  std::string scenario;
  std::string kernel;
  int n = 0;
  int p = 0;
  int iterations = 0;
  std::string status;
  int rank = 0;
  int dim_s_star = 0;
  double subspace_dist_fro = 0.0;
  double objective_final = 0.0;
  std::optional<double> sharpness_rho_hat;  // absent when dim(S*) = p
  double wall_time_s = 0.0;

  bool operator==(const RunRecord&) const = default;
};

inline constexpr const char* kRecordHeader =
    "seed,lambda,scenario,kernel,n,p,iterations,status,rank,dim_s_star,"
    "subspace_dist_fro,objective_final,sharpness_rho_hat,wall_time_s";

/// 17 significant digits: round-trips every finite double exactly.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string current;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(current);
      current.clear();
    } else {
      current += c;
    }
  }
  fields.push_back(current);
  return fields;
}

inline double parse_double(const std::string& s, std::size_t line_no, const char* field) {
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || s.empty() || errno == ERANGE) {
    throw CsvSchemaError("line " + std::to_string(line_no) + ": field '" + field +
                         "' is not a number: \"" + s + "\"");
  }
  return v;
}

inline long long parse_int(const std::string& s, std::size_t line_no, const char* field) {
  char* end = nullptr;
  errno = 0;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size() || s.empty() || errno == ERANGE) {
    throw CsvSchemaError("line " + std::to_string(line_no) + ": field '" + field +
                         "' is not an integer: \"" + s + "\"");
  }
  return v;
}

inline std::uint64_t parse_u64(const std::string& s, std::size_t line_no, const char* field) {
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (end != s.c_str() + s.size() || s.empty() || errno == ERANGE) {
    throw CsvSchemaError("line " + std::to_string(line_no) + ": field '" + field +
                         "' is not an unsigned integer: \"" + s + "\"");
  }
  return v;
}

}  // namespace detail

inline std::string to_csv_line(const RunRecord& r) {
  std::ostringstream out;
  out << r.seed << ',' << format_double(r.lambda) << ',' << r.scenario << ',' << r.kernel << ','
      << r.n << ',' << r.p << ',' << r.iterations << ',' << r.status << ',' << r.rank << ','
      << r.dim_s_star << ',' << format_double(r.subspace_dist_fro) << ','
      << format_double(r.objective_final) << ','
      << (r.sharpness_rho_hat ? format_double(*r.sharpness_rho_hat) : std::string()) << ','
      << format_double(r.wall_time_s);
  return out.str();
}

inline void write_records(const std::vector<RunRecord>& records,
                          const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_records: cannot open " + path.string());
  out << kRecordHeader << '\n';
  for (const RunRecord& r : records) out << to_csv_line(r) << '\n';
  if (!out) throw std::runtime_error("write_records: write failed for " + path.string());
}

inline std::vector<RunRecord> read_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_records: cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw CsvSchemaError("line 1: empty file, expected header");
  if (line != kRecordHeader) {
    throw CsvSchemaError("line 1: header mismatch, expected \"" + std::string(kRecordHeader) +
                         "\", got \"" + line + "\"");
  }
  std::vector<RunRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::vector<std::string> f = detail::split_csv_line(line);
    if (f.size() != 14) {
      throw CsvSchemaError("line " + std::to_string(line_no) + ": expected 14 fields, got " +
                           std::to_string(f.size()));
    }
    RunRecord r;
    r.seed = detail::parse_u64(f[0], line_no, "seed");
    r.lambda = detail::parse_double(f[1], line_no, "lambda");
    r.scenario = f[2];
    r.kernel = f[3];
    r.n = static_cast<int>(detail::parse_int(f[4], line_no, "n"));
    r.p = static_cast<int>(detail::parse_int(f[5], line_no, "p"));
    r.iterations = static_cast<int>(detail::parse_int(f[6], line_no, "iterations"));
    r.status = f[7];
    r.rank = static_cast<int>(detail::parse_int(f[8], line_no, "rank"));
    r.dim_s_star = static_cast<int>(detail::parse_int(f[9], line_no, "dim_s_star"));
    r.subspace_dist_fro = detail::parse_double(f[10], line_no, "subspace_dist_fro");
    r.objective_final = detail::parse_double(f[11], line_no, "objective_final");
    if (!f[12].empty()) {
      r.sharpness_rho_hat = detail::parse_double(f[12], line_no, "sharpness_rho_hat");
    }
    r.wall_time_s = detail::parse_double(f[13], line_no, "wall_time_s");
    records.push_back(std::move(r));
  }
  return records;
}

}  // namespace kmlearn
