#pragma once

// Per-iteration metrics and their CSV serialization. Diagnostics that were
// not evaluated at an iteration are stored as NaN and written as "nan".

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace marsadmm {

struct IterationRecord {
  std::int64_t iter = 0;
  std::int64_t sfo_count = 0;
  std::int64_t diag_sfo = 0;
  double wall_seconds = 0.0;
  double objective = NAN;
  double r_feas = NAN;
  double r_grad = NAN;
  double r_subdiff = NAN;
  double rho = NAN;
  double eta = NAN;
  double beta = NAN;
  double lambda_norm = NAN;
};

using Trace = std::vector<IterationRecord>;

inline constexpr const char* kTraceHeader =
    "iter,sfo_count,diag_sfo,wall_seconds,objective,r_feas,r_grad,r_subdiff,"
    "rho,eta,beta,lambda_norm";

class SchemaError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// 17 significant digits: enough for an exact round trip of any double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_trace(const Trace& trace, std::ostream& out) {
  out << kTraceHeader << '\n';
  for (const auto& r : trace) {
    out << r.iter << ',' << r.sfo_count << ',' << r.diag_sfo << ','
        << format_double(r.wall_seconds) << ',' << format_double(r.objective)
        << ',' << format_double(r.r_feas) << ',' << format_double(r.r_grad)
        << ',' << format_double(r.r_subdiff) << ',' << format_double(r.rho)
        << ',' << format_double(r.eta) << ',' << format_double(r.beta) << ','
        << format_double(r.lambda_norm) << '\n';
  }
}

namespace detail {

inline double parse_double_field(const std::string& s, std::size_t line) {
  if (s == "nan") return NAN;
  if (s == "inf") return INFINITY;
  if (s == "-inf") return -INFINITY;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw SchemaError("trace line " + std::to_string(line) +
                      ": bad number '" + s + "'");
  }
  return v;
}

inline std::int64_t parse_int_field(const std::string& s, std::size_t line) {
  char* end = nullptr;
  const long long v = std::strtoll(s.c_str(), &end, 10);
  if (s.empty() || end != s.c_str() + s.size()) {
    throw SchemaError("trace line " + std::to_string(line) +
                      ": bad integer '" + s + "'");
  }
  return v;
}

}  // namespace detail

inline Trace read_trace(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw SchemaError("trace is empty (no header)");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kTraceHeader) {
    throw SchemaError("trace header mismatch: '" + line + "'");
  }
  Trace trace;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (f.size() != 12) {
      throw SchemaError("trace line " + std::to_string(lineno) + ": expected 12 fields, got " +
                        std::to_string(f.size()));
    }
    IterationRecord r;
    r.iter = detail::parse_int_field(f[0], lineno);
    r.sfo_count = detail::parse_int_field(f[1], lineno);
    r.diag_sfo = detail::parse_int_field(f[2], lineno);
    r.wall_seconds = detail::parse_double_field(f[3], lineno);
    r.objective = detail::parse_double_field(f[4], lineno);
    r.r_feas = detail::parse_double_field(f[5], lineno);
    r.r_grad = detail::parse_double_field(f[6], lineno);
    r.r_subdiff = detail::parse_double_field(f[7], lineno);
    r.rho = detail::parse_double_field(f[8], lineno);
    r.eta = detail::parse_double_field(f[9], lineno);
    r.beta = detail::parse_double_field(f[10], lineno);
    r.lambda_norm = detail::parse_double_field(f[11], lineno);
    trace.push_back(r);
  }
  return trace;
}

inline void write_trace_file(const Trace& trace, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open trace for writing: " + path);
  write_trace(trace, out);
  out.flush();
  if (!out) throw std::runtime_error("failed writing trace: " + path);
}

inline Trace read_trace_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open trace: " + path);
  try {
    return read_trace(in);
  } catch (const SchemaError& e) {
    throw SchemaError(path + ": " + e.what());
  }
}

/// Field-wise equality where NaN matches NaN.
inline bool same_record(const IterationRecord& a, const IterationRecord& b) {
  auto eq = [](double x, double y) {
    return (std::isnan(x) && std::isnan(y)) || x == y;
  };
  return a.iter == b.iter && a.sfo_count == b.sfo_count &&
         a.diag_sfo == b.diag_sfo && eq(a.wall_seconds, b.wall_seconds) &&
         eq(a.objective, b.objective) && eq(a.r_feas, b.r_feas) &&
         eq(a.r_grad, b.r_grad) && eq(a.r_subdiff, b.r_subdiff) &&
         eq(a.rho, b.rho) && eq(a.eta, b.eta) && eq(a.beta, b.beta) &&
         eq(a.lambda_norm, b.lambda_norm);
}

}  // namespace marsadmm
