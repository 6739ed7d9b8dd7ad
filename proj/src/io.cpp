#include "nrmc/io.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>

namespace nrmc::io {

std::string number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(std::ostream& os, std::vector<std::string> header)
    : os_(os), columns_(header.size()) {
  for (const auto& h : header) cell(h);
  end_row();
}

CsvWriter& CsvWriter::cell(const std::string& s) {
  if (filled_ == columns_) throw ParameterError("CsvWriter: too many cells in row");
  if (filled_++ > 0) os_ << ',';
  if (s.find_first_of(",\"\n") == std::string::npos) {
    os_ << s;
  } else {
    os_ << '"';
    for (char c : s) {
      if (c == '"') os_ << '"';
      os_ << c;
    }
    os_ << '"';
  }
  return *this;
}

CsvWriter& CsvWriter::cell(double v) { return cell(number(v)); }
CsvWriter& CsvWriter::cell(std::int64_t v) { return cell(std::to_string(v)); }

void CsvWriter::end_row() {
  if (filled_ != columns_) throw ParameterError("CsvWriter: incomplete row");
  os_ << '\n';
  filled_ = 0;
}

void write_matrix_csv(std::ostream& os, const Matrix& m) {
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) {
      if (j) os << ',';
      os << number(m(i, j));
    }
    os << '\n';
  }
}

nlohmann::json kernel_sidecar(const TransitionKernel& P) {
  nlohmann::json j;
  j["label"] = P.label();
  j["space"] = P.lifted() ? "lifted" : "marginal";
  j["size"] = P.size();
  j["base_size"] = P.base_size();
  j["index_map"] = P.lifted() ? "(x,+1) -> x, (x,-1) -> S+x, 1-based, +1 block first"
                              : "x -> x, 1-based";
  j["params"] = nlohmann::json::object();
  for (const auto& [k, v] : P.params()) j["params"][k] = v;
  j["version"] = kVersion;
  return j;
}

nlohmann::json to_json(const SpectralReport& r) {
  nlohmann::json ev = nlohmann::json::array();
  for (Index i = 0; i < r.eigenvalues.size(); ++i)
    ev.push_back({r.eigenvalues(i).real(), r.eigenvalues(i).imag()});
  return {{"eigenvalues", ev},
          {"slem", r.slem},
          {"spectral_gap", r.spectral_gap},
          {"reversibilization_top", r.reversibilization_top}};
}

nlohmann::json to_json(const VarianceReport& r) {
  return {{"value", r.value},
          {"function", r.function},
          {"kernel", r.kernel},
          {"rcond", r.rcond},
          {"least_squares", r.least_squares}};
}

nlohmann::json to_json(const MixingTime& m) {
  return {{"steps", m.steps}, {"reached", m.reached}, {"cap", m.cap}};
}

void write_convergence_csv(std::ostream& os, const ConvergenceReport& r) {
  CsvWriter w(os, {"t", "tv", "l2"});
  for (std::size_t i = 0; i < r.times.size(); ++i) {
    w.cell(r.times[i]).cell(r.tv[i]).cell(r.l2[i]);
    w.end_row();
  }
}

void write_path_csv(std::ostream& os, const Path& p) {
  CsvWriter w(os, {"state"});
  for (Index x : p.states) {
    w.cell(static_cast<std::int64_t>(x + 1));
    w.end_row();
  }
}

void write_estimator_csv(std::ostream& os, const EstimatorSample& s) {
  CsvWriter w(os, {"replica", "average"});
  for (std::size_t r = 0; r < s.averages.size(); ++r) {
    w.cell(static_cast<std::int64_t>(r)).cell(s.averages[r]);
    w.end_row();
  }
}

Vector read_vector(std::istream& is) {
  std::vector<double> vals;
  std::string line;
  while (std::getline(is, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r,");
    if (first == std::string::npos) continue;
    const auto last = line.find_last_not_of(" \t\r,");
    const std::string tok = line.substr(first, last - first + 1);
    double v = 0.0;
    auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
      throw ParameterError("read_vector: cannot parse '" + tok + "'");
    vals.push_back(v);
  }
  return Eigen::Map<Vector>(vals.data(), static_cast<Index>(vals.size()));
}

}  // namespace nrmc::io
