#pragma once

#include "nrmc/analysis.hpp"
#include "nrmc/simulate.hpp"
#include "nrmc/types.hpp"

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace nrmc::io {

// 17 significant digits, round-trips every double.
std::string number(double v);

/// Minimal CSV writer: fixed header, ',' delimiter, '.' decimal point.
/// Cells containing ',', '"' or newlines are quoted.
class CsvWriter {
 public:
  CsvWriter(std::ostream& os, std::vector<std::string> header);

  CsvWriter& cell(const std::string& s);
  CsvWriter& cell(const char* s) { return cell(std::string(s)); }
  CsvWriter& cell(double v);
  CsvWriter& cell(std::int64_t v);
  CsvWriter& cell(int v) { return cell(static_cast<std::int64_t>(v)); }
  void end_row();

 private:
  std::ostream& os_;
  std::size_t columns_;
  std::size_t filled_ = 0;
};

// Dense row-major matrix, no header.
void write_matrix_csv(std::ostream& os, const Matrix& m);

// Sidecar describing a kernel export: space, index map, builder parameters.
nlohmann::json kernel_sidecar(const TransitionKernel& P);

nlohmann::json to_json(const SpectralReport& r);
nlohmann::json to_json(const VarianceReport& r);
nlohmann::json to_json(const MixingTime& m);

// Columns t,tv,l2 (marginal law for lifted kernels).
void write_convergence_csv(std::ostream& os, const ConvergenceReport& r);

// Single column "state" with 1-based labels; lifted states as 1..2S.
void write_path_csv(std::ostream& os, const Path& p);

// Columns replica,average.
void write_estimator_csv(std::ostream& os, const EstimatorSample& s);

// Reads one weight per line (blank lines and '#' comments skipped).
Vector read_vector(std::istream& is);

}  // namespace nrmc::io
