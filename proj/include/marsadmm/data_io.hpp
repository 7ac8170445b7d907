#pragma once

// Datasets: LIBSVM text ingestion and the synthetic generators used by the
// benchmarks.

#include "marsadmm/common.hpp"
#include "marsadmm/rng.hpp"

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace marsadmm {

struct SyntheticSource {
  std::string generator;
  std::uint64_t seed = 0;
  std::map<std::string, double> params;
};

struct FileSource {
  std::string path;
};

struct Dataset {
  /// N x dim, one sample per row.
  Matrix features;
  /// Present for classification data; entries are +1 or -1.
  std::optional<Vector> labels;
  std::variant<SyntheticSource, FileSource> source;
  /// Planted classifier of the synthetic classification generator.
  std::optional<Vector> ground_truth;
  std::string notes;

  Index num_samples() const { return features.rows(); }
  Index dim() const { return features.cols(); }
  /// Samples as columns (dim x N), the layout SPCA works with.
  Matrix spca_matrix() const { return features.transpose(); }
};

inline void validate(const Dataset& d) {
  if (!d.features.allFinite()) throw std::invalid_argument("dataset has NaN/Inf features");
  if (d.labels) {
    if (d.labels->size() != d.features.rows()) {
      throw DimensionError("dataset labels/features size mismatch");
    }
    for (Index i = 0; i < d.labels->size(); ++i) {
      const double b = (*d.labels)(i);
      if (b != 1.0 && b != -1.0) throw std::invalid_argument("dataset label not +-1");
    }
  }
}

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& msg)
      : std::runtime_error("line " + std::to_string(line) + ": " + msg),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

namespace detail {

inline bool parse_full_double(const std::string& s, double& out) {
  if (s.empty()) return false;
  char* end = nullptr;
  out = std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

}  // namespace detail

/// Parses "label idx:val idx:val ..." lines. Indices are 1-based and strictly
/// increasing within a line; missing entries are zero. Labels 0/-1 map to -1
/// and 1/+1 to +1. Blank lines and '#' comments are skipped. The feature
/// dimension is the largest index seen unless `dim` is given.
inline Dataset parse_libsvm(std::istream& in, std::optional<Index> dim = {}) {
  struct Row {
    double label;
    std::vector<std::pair<Index, double>> entries;
  };
  std::vector<Row> rows;
  Index max_index = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) {
      line.erase(hash);
    }
    std::istringstream ss(line);
    std::string tok;
    if (!(ss >> tok)) continue;
    Row row;
    double label = 0.0;
    if (!detail::parse_full_double(tok, label)) {
      throw ParseError(lineno, "bad label '" + tok + "'");
    }
    if (label == 0.0 || label == -1.0) {
      row.label = -1.0;
    } else if (label == 1.0) {
      row.label = 1.0;
    } else {
      throw ParseError(lineno, "label '" + tok + "' not in {0, -1, +1}");
    }
    Index last = 0;
    while (ss >> tok) {
      const auto colon = tok.find(':');
      if (colon == std::string::npos || colon == 0) {
        throw ParseError(lineno, "malformed token '" + tok + "'");
      }
      const std::string idx_s = tok.substr(0, colon);
      char* end = nullptr;
      const long long idx = std::strtoll(idx_s.c_str(), &end, 10);
      if (end != idx_s.c_str() + idx_s.size() || idx < 1) {
        throw ParseError(lineno, "bad index in '" + tok + "'");
      }
      double val = 0.0;
      if (!detail::parse_full_double(tok.substr(colon + 1), val)) {
        throw ParseError(lineno, "bad value in '" + tok + "'");
      }
      if (!std::isfinite(val)) {
        throw ParseError(lineno, "non-finite value in '" + tok + "'");
      }
      if (idx <= last) {
        throw ParseError(lineno, "indices not strictly increasing at '" + tok + "'");
      }
      last = static_cast<Index>(idx);
      row.entries.emplace_back(last, val);
    }
    max_index = std::max(max_index, last);
    rows.push_back(std::move(row));
  }

  Index d = max_index;
  if (dim) {
    if (*dim < max_index) {
      throw std::invalid_argument("feature index " + std::to_string(max_index) +
                                  " exceeds requested dimension " +
                                  std::to_string(*dim));
    }
    d = *dim;
  }
  Dataset out;
  out.features = Matrix::Zero(static_cast<Index>(rows.size()), d);
  Vector labels(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = static_cast<Index>(i);
    labels(r) = rows[i].label;
    for (const auto& [j, v] : rows[i].entries) out.features(r, j - 1) = v;
  }
  out.labels = std::move(labels);
  out.source = FileSource{"<stream>"};
  return out;
}

inline Dataset load_libsvm(const std::string& path,
                           std::optional<Index> dim = {}) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset: " + path);
  try {
    Dataset d = parse_libsvm(in, dim);
    d.source = FileSource{path};
    return d;
  } catch (const ParseError& e) {
    throw ParseError(e.line(), path + ": " + e.what());
  }
}

/// Writes labelled data in LIBSVM format, nonzero entries only, 17 digits.
inline void serialize_libsvm(const Dataset& d, std::ostream& out) {
  if (!d.labels) throw std::invalid_argument("serialize_libsvm needs labels");
  char buf[40];
  for (Index i = 0; i < d.features.rows(); ++i) {
    out << ((*d.labels)(i) > 0 ? "1" : "-1");
    for (Index j = 0; j < d.features.cols(); ++j) {
      const double v = d.features(i, j);
      if (v == 0.0) continue;
      std::snprintf(buf, sizeof buf, "%.17g", v);
      out << ' ' << (j + 1) << ':' << buf;
    }
    out << '\n';
  }
}

/// n x m Gaussian matrix whose columns (the samples) are centred to zero mean
/// and scaled to unit Euclidean norm. Stored transposed in `features`.
inline Dataset gen_spca_data(Index n, Index m, std::uint64_t seed) {
  if (m < 2) throw std::invalid_argument("gen_spca_data needs m >= 2");
  if (n < 2) throw std::invalid_argument("gen_spca_data needs n >= 2");
  Rng rng = make_stream(seed, "spca-data");
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(n, m);
  for (Index j = 0; j < m; ++j) {
    for (Index i = 0; i < n; ++i) z(i, j) = normal(rng);
  }
  for (Index j = 0; j < m; ++j) {
    z.col(j).array() -= z.col(j).mean();
    z.col(j) /= z.col(j).norm();
  }
  Dataset d;
  d.features = z.transpose();
  d.source = SyntheticSource{"spca", seed, {{"n", double(n)}, {"m", double(m)}}};
  d.notes = "entries N(0,1); each sample centred then normalized";
  return d;
}

/// Planted linear classifier: x ~ N(0, I_m) normalized; features U[-1, 1]
/// entrywise; b_i = +1 if x^T a_i + eps_i >= 0 else -1, eps_i ~ N(0, sigma2).
/// The feature, planted-vector and noise streams are independent, so for a
/// fixed seed only the labels change with sigma2.
inline Dataset gen_classifier_data(Index m, Index num_samples, double sigma2,
                                   std::uint64_t seed) {
  if (m < 2) throw std::invalid_argument("classifier dimension must be >= 2");
  if (num_samples < 1) throw std::invalid_argument("need at least one sample");
  if (!(sigma2 >= 0.0) || !std::isfinite(sigma2)) {
    throw std::invalid_argument("sigma2 must be finite and >= 0");
  }
  Rng truth_rng = make_stream(seed, "classifier-truth");
  Rng feat_rng = make_stream(seed, "classifier-features");
  Rng noise_rng = make_stream(seed, "classifier-noise");
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);

  Vector truth(m);
  for (Index i = 0; i < m; ++i) truth(i) = normal(truth_rng);
  truth /= truth.norm();

  Matrix features(num_samples, m);
  for (Index i = 0; i < num_samples; ++i) {
    for (Index j = 0; j < m; ++j) features(i, j) = uniform(feat_rng);
  }
  const double sigma = std::sqrt(sigma2);
  Vector labels(num_samples);
  for (Index i = 0; i < num_samples; ++i) {
    const double eps = sigma * normal(noise_rng);
    labels(i) = features.row(i).dot(truth) + eps >= 0.0 ? 1.0 : -1.0;
  }

  Dataset d;
  d.features = std::move(features);
  d.labels = std::move(labels);
  d.ground_truth = std::move(truth);
  d.source = SyntheticSource{
      "classifier", seed,
      {{"m", double(m)}, {"N", double(num_samples)}, {"sigma2", sigma2}}};
  d.notes = "features U[-1,1] entrywise; ties x^T a + eps = 0 labelled +1";
  return d;
}

}  // namespace marsadmm
