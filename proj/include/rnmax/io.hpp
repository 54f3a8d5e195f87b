#ifndef RNMAX_IO_HPP
#define RNMAX_IO_HPP

// CSV and sidecar serialization for samples, curve estimates and experiment
// results.

#include "rnmax/estimators.hpp"
#include "rnmax/harness.hpp"
#include "rnmax/samplers.hpp"

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rnmax {

using MetaList = std::vector<std::pair<std::string, std::string>>;

class IoError : public std::runtime_error {
 public:
  IoError(const std::filesystem::path& path, const std::string& what)
      : std::runtime_error(path.string() + ": " + what), path_(path) {}
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

/// Malformed input; line is 1-based (0 when not tied to a line).
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, const std::string& what)
      : std::runtime_error(source + (line ? ":" + std::to_string(line) : std::string()) + ": " +
                           what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Shortest text that round-trips (%.17g).
std::string format_double(double x);
double parse_double(const std::string& s, const std::string& source, std::size_t line);

void write_paired_sample(std::ostream& os, const PairedSample& s);
void write_paired_sample(const std::filesystem::path& path, const PairedSample& s);
PairedSample read_paired_sample(std::istream& is, const std::string& source = "<stream>");
PairedSample read_paired_sample(const std::filesystem::path& path);

void write_curve_estimate(std::ostream& os, const CurveEstimate& c);
void write_curve_estimate(const std::filesystem::path& path, const CurveEstimate& c);

/// One row of the results CSV.
struct ResultRow {
  int experiment = 1;
  double alpha = 0.0;
  double psi_or_rho = 0.0;
  double upsilon = 0.0;  // NaN / "NA" for experiment 1
  int n = 0;
  std::string estimator_pair;
  bool corrected = true;
  int R = 0;
  int failures = 0;
  int clamps = 0;
  double MISE = 0.0;
  double ISB = 0.0;
  double IV = 0.0;
  double wall_ms = 0.0;
};

std::vector<ResultRow> result_rows(const ExperimentResult& result);
void write_results(std::ostream& os, const std::vector<ResultRow>& rows);
void write_results(const std::filesystem::path& path, const std::vector<ResultRow>& rows);
std::vector<ResultRow> read_results(std::istream& is, const std::string& source = "<stream>");
std::vector<ResultRow> read_results(const std::filesystem::path& path);

/// Plot-data files mirroring the figure layouts; returns the paths written.
std::vector<std::filesystem::path> write_figures(const std::vector<ResultRow>& rows,
                                                 const std::filesystem::path& dir);

/// key=value lines.
void write_sidecar(const std::filesystem::path& path, const MetaList& meta);
MetaList read_sidecar(const std::filesystem::path& path);

/// Writes text atomically enough for our purposes; throws IoError.
void write_text_file(const std::filesystem::path& path, const std::string& text);
std::string read_text_file(const std::filesystem::path& path);

}  // namespace rnmax

#endif  // RNMAX_IO_HPP
