#include "nrmc/cli.hpp"

#include "nrmc/analysis.hpp"
#include "nrmc/io.hpp"
#include "nrmc/kernels.hpp"
#include "nrmc/simulate.hpp"
#include "nrmc/targets.hpp"
#include "nrmc/vorticity.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <set>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;
using nlohmann::json;

namespace nrmc::cli {

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

double parse_double(const std::string& key, const std::string& s) {
  double v = 0.0;
  const std::string t = trim(s);
  auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size() || !std::isfinite(v))
    throw UsageError("'" + key + "': cannot parse '" + s + "' as a number");
  return v;
}

std::int64_t parse_int(const std::string& key, const std::string& s) {
  const double v = parse_double(key, s);
  if (v != std::floor(v) || std::abs(v) > 9e15)
    throw UsageError("'" + key + "': expected an integer, got '" + s + "'");
  return static_cast<std::int64_t>(v);
}

bool parse_bool(const std::string& key, const std::string& s) {
  const std::string t = trim(s);
  if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
  if (t == "0" || t == "false" || t == "no" || t == "off") return false;
  throw UsageError("'" + key + "': expected a boolean, got '" + s + "'");
}

std::string short_num(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

const std::set<std::string> kAlgorithms{"mh", "gw", "gw_alpha", "lifted_gw", "nrmh", "nrmhav"};
const std::set<std::string> kDiagnostics{"convergence", "mixing_time", "variance", "spectrum",
                                         "conductance", "moments", "estimator"};
const std::set<std::string> kExamples{"ex1", "ex2", "ex3", "ex4", "custom"};

}  // namespace

const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys{
      "example", "S", "rho", "eps", "contrast", "zeta_ratio", "zeta_grid", "alpha", "varrho",
      "alg", "diag", "functions", "proposal", "target_file", "out", "seed", "horizon",
      "mix_eps", "mix_cap", "conductance_mode", "start", "svg", "threads", "max_points",
      "replicas", "length", "burn_in", "export_kernels", "mix_law"};
  return keys;
}

Entries parse_config_text(const std::string& text) {
  Entries out;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  const auto& keys = known_keys();
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (std::find(keys.begin(), keys.end(), key) == keys.end())
      throw UsageError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

Entries read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

bool is_ranged(const std::string& spec) {
  return spec.find(':') != std::string::npos || spec.find(',') != std::string::npos;
}

std::vector<double> expand_range(const std::string& spec) {
  if (spec.find(':') != std::string::npos) {
    const auto parts = split(spec, ':');
    if (parts.size() != 3) throw UsageError("range '" + spec + "' must be start:stop:step");
    const double a = parse_double("range", parts[0]);
    const double b = parse_double("range", parts[1]);
    const double h = parse_double("range", parts[2]);
    if (!(h > 0.0) || b < a) throw UsageError("range '" + spec + "' needs step > 0 and stop >= start");
    const double n = std::floor((b - a) / h + 1e-9);
    if (n > 1e6) throw UsageError("range '" + spec + "' has too many points");
    std::vector<double> out;
    for (std::int64_t k = 0; k <= static_cast<std::int64_t>(n); ++k)
      out.push_back(a + static_cast<double>(k) * h);
    return out;
  }
  std::vector<double> out;
  for (const auto& p : split(spec, ',')) out.push_back(parse_double("list", p));
  if (out.empty()) throw UsageError("empty value list");
  return out;
}

ExperimentConfig make_config(const Entries& entries) {
  ExperimentConfig c;
  auto has = [&](const char* k) { return entries.count(k) > 0; };
  auto get = [&](const char* k) { return entries.at(k); };
  auto scalar = [&](const char* k) {
    const std::string v = get(k);
    if (is_ranged(v))
      throw UsageError("'" + std::string(k) + "' takes a single value here (use sweep for ranges)");
    return v;
  };

  if (!has("example")) throw UsageError("no example given (ex1, ex2, ex3, ex4 or custom)");
  c.example = get("example");
  if (!kExamples.count(c.example)) throw UsageError("unknown example '" + c.example + "'");

  const std::map<std::string, Index> default_S{{"ex1", 10}, {"ex2", 9}, {"ex3", 50}, {"ex4", 30}, {"custom", 0}};
  c.S = default_S.at(c.example);
  if (has("S")) c.S = parse_int("S", scalar("S"));
  if (has("rho")) c.rho = parse_double("rho", scalar("rho"));
  if (has("eps")) c.eps = parse_double("eps", scalar("eps"));
  if (has("contrast")) c.contrast = parse_double("contrast", scalar("contrast"));
  if (has("zeta_ratio")) c.zeta_ratio = expand_range(get("zeta_ratio"));
  if (has("zeta_grid")) {
    const auto n = parse_int("zeta_grid", get("zeta_grid"));
    if (n < 2) throw UsageError("'zeta_grid' needs at least 2 points");
    // symmetric grid over [-1, 1] in units of zeta_max
    c.zeta_ratio.clear();
    for (std::int64_t k = 0; k < n; ++k)
      c.zeta_ratio.push_back(-1.0 + 2.0 * static_cast<double>(k) / static_cast<double>(n - 1));
  }
  if (has("alpha")) c.alpha = expand_range(get("alpha"));
  if (has("varrho")) c.varrho = expand_range(get("varrho"));
  if (has("alg")) c.algorithms = split(get("alg"), ',');
  if (has("diag")) c.diagnostics = split(get("diag"), ',');
  if (has("functions")) c.functions = split(get("functions"), ',');
  if (has("proposal")) c.proposal = get("proposal");
  if (has("target_file")) c.target_file = get("target_file");
  if (has("out")) {
    c.outdir = get("out");
  } else if (const char* env = std::getenv(kOutputDirEnv); env && *env) {
    c.outdir = env;
  } else {
    c.outdir = "out";
  }
  if (has("seed")) {
    const std::string s = trim(get("seed"));
    std::uint64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size())
      throw UsageError("'seed': expected an unsigned 64-bit integer");
    c.seed = v;
  }
  if (has("horizon")) c.horizon = parse_int("horizon", get("horizon"));
  if (has("mix_eps")) c.mix_eps = parse_double("mix_eps", get("mix_eps"));
  if (has("mix_cap")) c.mix_cap = parse_int("mix_cap", get("mix_cap"));
  if (has("conductance_mode")) c.conductance_mode = get("conductance_mode");
  if (has("mix_law")) {
    const std::string law = get("mix_law");
    if (law != "marginal" && law != "joint") throw UsageError("'mix_law' must be marginal or joint");
    c.joint_law = law == "joint";
  }
  if (has("start")) c.start = parse_int("start", get("start"));
  if (has("svg")) c.svg = parse_bool("svg", get("svg"));
  if (has("threads")) c.threads = static_cast<unsigned>(parse_int("threads", get("threads")));
  if (has("max_points")) c.max_points = parse_int("max_points", get("max_points"));

  // checks that do not need the target
  if (c.algorithms.empty()) throw UsageError("empty algorithm list");
  for (const auto& a : c.algorithms)
    if (!kAlgorithms.count(a)) throw UsageError("unknown algorithm '" + a + "'");
  if (c.diagnostics.empty()) throw UsageError("empty diagnostic list");
  for (const auto& d : c.diagnostics)
    if (!kDiagnostics.count(d)) throw UsageError("unknown diagnostic '" + d + "'");
  for (double r : c.zeta_ratio)
    if (!(r >= -1.0 && r <= 1.0)) throw UsageError("'zeta_ratio' values must lie in [-1, 1]");
  for (double a : c.alpha)
    if (!(a >= 0.0 && a <= 1.0)) throw UsageError("'alpha' values must lie in [0, 1]");
  for (double r : c.varrho)
    if (!(r >= 0.0 && r <= 1.0)) throw UsageError("'varrho' values must lie in [0, 1]");
  if (c.horizon < 0) throw UsageError("'horizon' must be >= 0");
  if (!(c.mix_eps > 0.0)) throw UsageError("'mix_eps' must be > 0");
  if (c.mix_cap < 1) throw UsageError("'mix_cap' must be >= 1");
  if (c.conductance_mode != "auto" && c.conductance_mode != "exhaustive" && c.conductance_mode != "arcs")
    throw UsageError("'conductance_mode' must be auto, exhaustive or arcs");
  if (c.max_points < 1) throw UsageError("'max_points' must be >= 1");
  if (c.proposal != "neighbor" && c.proposal != "lazy")
    throw UsageError("'proposal' must be neighbor or lazy");
  if (c.example == "custom" && c.target_file.empty())
    throw UsageError("the custom example needs 'target_file'");

  const bool circle = c.example != "ex4";
  if (!circle)
    for (const auto& a : c.algorithms)
      if (a == "gw" || a == "gw_alpha" || a == "lifted_gw")
        throw UsageError("'" + a + "' needs a circle target; ex4 is a grid");

  // example-level parameter ranges; the builders would reject these too, but
  // this way nothing is computed before the whole config is known to be good
  if (c.example == "ex1" && (c.S < 4 || c.S % 2 != 0)) throw UsageError("ex1 needs even S >= 4");
  if (c.example == "ex1" && !(c.rho > 0.0 && c.rho <= 1.0)) throw UsageError("ex1 needs rho in (0, 1]");
  if (c.example == "ex2" && (c.S < 5 || c.S % 2 == 0)) throw UsageError("ex2 needs odd S >= 5");
  if (c.example == "ex3" && c.S < 3) throw UsageError("ex3 needs S >= 3");
  if ((c.example == "ex3" || c.proposal == "lazy") && !(c.eps > 0.0 && c.eps < 1.0))
    throw UsageError("the lazy proposal needs eps in (0, 1)");
  if (c.example == "ex4" && c.S < 3) throw UsageError("ex4 needs S >= 3");
  if (c.example == "ex4" && !(c.contrast >= 1.0 && c.contrast < 1.5))
    throw UsageError("ex4 needs contrast in [1, 1.5)");

  // effective values, recorded in report.json
  c.resolved = entries;
  c.resolved["S"] = std::to_string(c.S);
  c.resolved["out"] = c.outdir;
  c.resolved["seed"] = std::to_string(c.seed);
  return c;
}

//------------------------------------------------------------------------------
// Experiment assembly
//------------------------------------------------------------------------------

namespace {

struct Problem {
  Target pi;
  ProposalKernel Q;
  VorticityField unit;
  bool circle;
};

Problem build_problem(const ExperimentConfig& c) {
  if (c.example == "ex1") {
    return {rugged_circle(c.S, c.rho), neighbor_proposal_circle(c.S), circle_vorticity(c.S, 1.0), true};
  }
  if (c.example == "ex2") {
    return {linear_circle(c.S), neighbor_proposal_circle(c.S), circle_vorticity(c.S, 1.0), true};
  }
  if (c.example == "ex3") {
    return {uniform_circle(c.S), lazy_proposal_circle(c.S, c.eps), circle_vorticity(c.S, 1.0), true};
  }
  if (c.example == "ex4") {
    return {sigma_grid(c.S, c.contrast), grid_proposal(c.S), grid_vorticity(c.S, 1.0), false};
  }
  std::ifstream in(c.target_file);
  if (!in) throw UsageError("cannot open target file '" + c.target_file + "'");
  Vector w = io::read_vector(in);
  if (w.size() < 3) throw UsageError("custom target needs at least 3 states");
  if (w.minCoeff() <= 0.0 || !w.allFinite()) throw UsageError("custom target weights must be positive");
  w /= w.sum();
  const Index S = w.size();
  Target pi(std::move(w), "custom(" + c.target_file + ")", Topology::circle, S);
  ProposalKernel Q = c.proposal == "lazy" ? lazy_proposal_circle(S, c.eps) : neighbor_proposal_circle(S);
  return {std::move(pi), std::move(Q), circle_vorticity(S, 1.0), true};
}

// zeta = ratio * zeta_max of the field pointing the way the sign of ratio says.
VorticityField scaled_field(const Problem& p, const ProposalKernel& Q, double ratio) {
  if (ratio == 0.0) return p.unit.scaled(0.0);
  const VorticityField dir = ratio > 0 ? p.unit : p.unit.negated();
  const double zm = zeta_max(p.pi, Q, dir);
  return p.unit.scaled(ratio * zm);
}

// NRMHAV needs a pi-reversible proposal; Q is used when it qualifies and the
// MH kernel built on Q otherwise.
ProposalKernel nrmhav_proposal(const Problem& p) {
  if (reversibility_defect(p.Q.matrix(), p.pi.probs()) <= kReversibilityTol) return p.Q;
  return ProposalKernel(mh(p.pi, p.Q).matrix(), "mh(" + p.Q.label() + ")");
}

struct NamedKernel {
  std::string algorithm;
  std::string name;
  TransitionKernel kernel;
};

std::vector<NamedKernel> build_kernels(const ExperimentConfig& c, const Problem& p) {
  std::vector<NamedKernel> out;
  std::optional<TransitionKernel> gw;
  auto get_gw = [&]() -> const TransitionKernel& {
    if (!gw) gw = guided_walk(p.pi, p.pi.size());
    return *gw;
  };
  for (const auto& a : c.algorithms) {
    if (a == "mh") {
      out.push_back({a, "mh", mh(p.pi, p.Q)});
    } else if (a == "gw") {
      out.push_back({a, "gw", get_gw()});
    } else if (a == "gw_alpha") {
      for (double al : c.alpha)
        out.push_back({a, "gw_alpha(alpha=" + short_num(al) + ")", gw_alpha(get_gw(), al)});
    } else if (a == "lifted_gw") {
      out.push_back({a, "lifted_gw", lifted_gw(p.pi, p.pi.size())});
    } else if (a == "nrmh") {
      for (double r : c.zeta_ratio)
        out.push_back({a, "nrmh(zeta_ratio=" + short_num(r) + ")", nrmh(p.pi, p.Q, scaled_field(p, p.Q, r))});
    } else if (a == "nrmhav") {
      const ProposalKernel Qr = nrmhav_proposal(p);
      for (double r : c.zeta_ratio)
        for (double v : c.varrho)
          out.push_back({a, "nrmhav(zeta_ratio=" + short_num(r) + ",varrho=" + short_num(v) + ")",
                         nrmhav(p.pi, Qr, scaled_field(p, Qr, r), v)});
    }
  }
  return out;
}

TestFunction make_function(const Target& pi, const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string kind = spec.substr(0, colon);
  auto param = [&]() -> int {
    if (colon == std::string::npos) throw UsageError("function '" + spec + "' needs a parameter");
    return static_cast<int>(parse_int("functions", spec.substr(colon + 1)));
  };
  if (kind == "id") return test_function(pi, FunctionKind::identity);
  if (kind == "ind") return test_function(pi, FunctionKind::indicator, param());
  if (kind == "poly") return test_function(pi, FunctionKind::polynomial, param());
  if (kind == "invpoly") return test_function(pi, FunctionKind::inverse_polynomial, param());
  throw UsageError("unknown function '" + spec + "' (id, ind:k, poly:n, invpoly:n)");
}

std::int64_t effective_horizon(const ExperimentConfig& c, const Problem& p) {
  if (c.horizon > 0) return c.horizon;
  const auto n = static_cast<std::int64_t>(p.pi.size());
  return std::min<std::int64_t>(20000, 4 * n * n);
}

ConductanceMode conductance_mode(const ExperimentConfig& c, Index n) {
  if (c.conductance_mode == "exhaustive") return ConductanceMode::exhaustive;
  if (c.conductance_mode == "arcs") return ConductanceMode::arcs;
  return n <= 16 ? ConductanceMode::exhaustive : ConductanceMode::arcs;
}

void write_file(const fs::path& path, const std::string& content) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out) throw Error("write to '" + tmp.string() + "' failed");
  }
  fs::rename(tmp, path);
}

// Log-scale TV curves, one polyline per kernel.
std::string convergence_svg(const std::vector<std::pair<std::string, ConvergenceReport>>& curves,
                            const std::string& title) {
  constexpr double W = 720, H = 440, L = 70, R = 180, T = 40, B = 50;
  constexpr double kFloor = 1e-12;
  std::int64_t tmax = 1;
  for (const auto& [_, c] : curves) tmax = std::max(tmax, c.times.empty() ? 1 : c.times.back());
  const double ymin = std::log10(kFloor), ymax = 0.0;
  auto X = [&](double t) { return L + (W - L - R) * t / static_cast<double>(tmax); };
  auto Y = [&](double v) {
    const double lv = std::log10(std::max(v, kFloor));
    return T + (H - T - B) * (ymax - lv) / (ymax - ymin);
  };
  static const char* colors[] = {"#1b9e77", "#d95f02", "#7570b3", "#e7298a", "#66a61e", "#e6ab02",
                                 "#a6761d", "#666666"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  os << "<text x=\"" << L << "\" y=\"20\" font-size=\"13\">" << title << "</text>\n";
  os << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << W - L - R << "\" height=\"" << H - T - B
     << "\" fill=\"none\" stroke=\"#000\"/>\n";
  for (int e = 0; e >= -12; e -= 2)
    os << "<text x=\"" << L - 8 << "\" y=\"" << Y(std::pow(10.0, e)) + 4
       << "\" text-anchor=\"end\">1e" << e << "</text>\n";
  os << "<text x=\"" << (W - R + L) / 2 << "\" y=\"" << H - 15 << "\" text-anchor=\"middle\">t (max "
     << tmax << ")</text>\n";
  std::size_t k = 0;
  for (const auto& [name, c] : curves) {
    const char* col = colors[k % 8];
    os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
    // thin out long curves to about 2000 vertices
    const std::size_t stride = std::max<std::size_t>(1, c.times.size() / 2000);
    for (std::size_t i = 0; i < c.times.size(); i += stride)
      os << X(static_cast<double>(c.times[i])) << ',' << Y(c.tv[i]) << ' ';
    os << "\"/>\n";
    os << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 14 * (k + 1) << "\" fill=\"" << col << "\">"
       << name << "</text>\n";
    ++k;
  }
  os << "</svg>\n";
  return os.str();
}

struct Moments {
  double product1, increment1, increment2;
};

Moments moments(const TransitionKernel& K, const Target& pi) {
  return {lag_moment(K, pi, 1, MomentKind::product), lag_moment(K, pi, 1, MomentKind::squared_increment),
          lag_moment(K, pi, 2, MomentKind::squared_increment)};
}

std::int64_t entry_int(const Entries& e, const char* key, std::int64_t dflt) {
  auto it = e.find(key);
  return it == e.end() ? dflt : parse_int(key, it->second);
}

//------------------------------------------------------------------------------
// run
//------------------------------------------------------------------------------

int run_command(const ExperimentConfig& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const Problem p = build_problem(c);
  if (c.start < 1 || c.start > p.pi.size())
    throw UsageError("'start' must lie in 1.." + std::to_string(p.pi.size()));
  std::vector<TestFunction> fns;
  for (const auto& s : c.functions) fns.push_back(make_function(p.pi, s));
  const auto kernels = build_kernels(c, p);

  fs::create_directories(c.outdir);
  const fs::path dir(c.outdir);
  json report;
  report["command"] = "run";
  report["example"] = c.example;
  report["version"] = kVersion;
  report["rng"] = kRngName;
  report["seed"] = c.seed;
  report["params"] = c.resolved;
  report["target"] = p.pi.label();
  report["proposal"] = p.Q.label();
  json files = json::array();
  json summary = json::object();

  auto file = [&](const std::string& diag, const std::string& ext = "csv") {
    const std::string name = c.example + "_" + diag + "." + ext;
    files.push_back(name);
    return dir / name;
  };

  json kernel_meta = json::array();
  for (const auto& nk : kernels) {
    json k = io::kernel_sidecar(nk.kernel);
    k["name"] = nk.name;
    kernel_meta.push_back(k);
  }
  report["kernels"] = kernel_meta;

  for (const auto& d : c.diagnostics) {
    std::ostringstream os;
    if (d == "convergence") {
      const std::int64_t horizon = effective_horizon(c, p);
      io::CsvWriter w(os, {"kernel", "t", "tv", "l2"});
      std::vector<std::pair<std::string, ConvergenceReport>> curves;
      for (const auto& nk : kernels) {
        auto rep = convergence_curve(nk.kernel, p.pi, dirac(nk.kernel, c.start - 1), horizon);
        for (std::size_t i = 0; i < rep.times.size(); ++i) {
          w.cell(nk.name).cell(rep.times[i]).cell(rep.tv[i]).cell(rep.l2[i]);
          w.end_row();
        }
        curves.emplace_back(nk.name, std::move(rep));
      }
      write_file(file(d), os.str());
      if (c.svg) write_file(file(d, "svg"), convergence_svg(curves, c.example + ": TV to target"));
    } else if (d == "mixing_time") {
      io::CsvWriter w(os, {"kernel", "eps", "steps", "reached", "cap"});
      for (const auto& nk : kernels) {
        const auto m = mixing_time(nk.kernel, p.pi, dirac(nk.kernel, c.start - 1), c.mix_eps, c.mix_cap,
                                   c.joint_law ? Law::joint : Law::marginal);
        w.cell(nk.name).cell(c.mix_eps).cell(m.steps).cell(m.reached ? 1 : 0).cell(m.cap);
        w.end_row();
        summary["mixing_time"][nk.name] = io::to_json(m);
      }
      write_file(file(d), os.str());
    } else if (d == "variance") {
      io::CsvWriter w(os, {"kernel", "function", "value"});
      for (const auto& nk : kernels)
        for (const auto& f : fns) {
          const auto v = asymptotic_variance(nk.kernel, p.pi, f);
          w.cell(nk.name).cell(f.label).cell(v.value);
          w.end_row();
        }
      write_file(file(d), os.str());
    } else if (d == "spectrum") {
      io::CsvWriter w(os, {"kernel", "index", "re", "im"});
      json spectra = json::object();
      for (const auto& nk : kernels) {
        const auto s = spectrum(nk.kernel, p.pi);
        for (Index i = 0; i < s.eigenvalues.size(); ++i) {
          w.cell(nk.name).cell(static_cast<std::int64_t>(i + 1)).cell(s.eigenvalues(i).real()).cell(s.eigenvalues(i).imag());
          w.end_row();
        }
        spectra[nk.name] = io::to_json(s);
      }
      write_file(file(d), os.str());
      write_file(file(d, "json"), spectra.dump(2) + "\n");
    } else if (d == "conductance") {
      io::CsvWriter w(os, {"kernel", "mode", "h", "cheeger_lower", "cheeger_upper"});
      for (const auto& nk : kernels) {
        const auto mode = conductance_mode(c, nk.kernel.size());
        const double h = conductance(nk.kernel, p.pi, mode);
        const auto [lo, hi] = cheeger_bounds(std::clamp(h, 0.0, 1.0));
        w.cell(nk.name).cell(mode == ConductanceMode::exhaustive ? "exhaustive" : "arcs").cell(h).cell(lo).cell(hi);
        w.end_row();
      }
      write_file(file(d), os.str());
    } else if (d == "moments") {
      io::CsvWriter w(os, {"kernel", "lag", "kind", "value"});
      for (const auto& nk : kernels) {
        const Moments m = moments(nk.kernel, p.pi);
        w.cell(nk.name).cell(1).cell("product").cell(m.product1);
        w.end_row();
        w.cell(nk.name).cell(1).cell("squared_increment").cell(m.increment1);
        w.end_row();
        w.cell(nk.name).cell(2).cell("squared_increment").cell(m.increment2);
        w.end_row();
      }
      write_file(file(d), os.str());
    } else if (d == "estimator") {
      SimConfig sc;
      sc.seed = c.seed;
      sc.replicas = entry_int(c.resolved, "replicas", 1000);
      sc.length = entry_int(c.resolved, "length", 10000);
      sc.burn_in = entry_int(c.resolved, "burn_in", 0);
      sc.threads = c.threads;
      try {
        sc.check();
      } catch (const ParameterError& e) {
        throw UsageError(e.what());
      }
      io::CsvWriter w(os, {"kernel", "function", "replica", "average"});
      for (const auto& nk : kernels)
        for (const auto& f : fns) {
          const auto s = estimator_distribution(nk.kernel, p.pi, f, sc);
          for (std::size_t r = 0; r < s.averages.size(); ++r) {
            w.cell(nk.name).cell(f.label).cell(static_cast<std::int64_t>(r)).cell(s.averages[r]);
            w.end_row();
          }
          summary["estimator"][nk.name][f.label] = {{"mean", s.mean},
                                                    {"scaled_variance", s.scaled_variance},
                                                    {"scaled_variance_se", s.scaled_variance_se}};
        }
      write_file(file(d), os.str());
    }
  }

  if (c.resolved.count("export_kernels") && parse_bool("export_kernels", c.resolved.at("export_kernels"))) {
    for (std::size_t i = 0; i < kernels.size(); ++i) {
      std::ostringstream os;
      io::write_matrix_csv(os, kernels[i].kernel.matrix());
      const std::string base = c.example + "_kernel" + std::to_string(i + 1);
      write_file(dir / (base + ".csv"), os.str());
      json side = io::kernel_sidecar(kernels[i].kernel);
      side["name"] = kernels[i].name;
      write_file(dir / (base + ".json"), side.dump(2) + "\n");
      files.push_back(base + ".csv");
      files.push_back(base + ".json");
    }
  }

  report["files"] = files;
  report["summary"] = summary;
  report["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_file(dir / "report.json", report.dump(2) + "\n");
  return 0;
}

//------------------------------------------------------------------------------
// sweep
//------------------------------------------------------------------------------

const std::vector<std::string> kSweepable{"S", "rho", "eps", "contrast", "zeta_ratio", "alpha", "varrho"};

std::vector<std::string> sweep_columns(const ExperimentConfig& c, const std::vector<std::string>& ranged,
                                       const std::vector<TestFunction>& fns) {
  std::vector<std::string> cols = ranged;
  for (const auto& a : c.algorithms)
    for (const auto& d : c.diagnostics) {
      if (d == "mixing_time") {
        cols.push_back(a + "_tau");
      } else if (d == "variance") {
        for (const auto& f : fns) cols.push_back(a + "_v_" + f.label);
      } else if (d == "spectrum") {
        cols.push_back(a + "_slem");
        cols.push_back(a + "_rev_top");
      } else if (d == "conductance") {
        cols.push_back(a + "_h");
      } else if (d == "moments") {
        cols.push_back(a + "_xx1");
        cols.push_back(a + "_dx1");
        cols.push_back(a + "_dx2");
      }
    }
  return cols;
}

std::string sweep_row(const ExperimentConfig& c, const std::vector<std::string>& ranged,
                      const std::vector<double>& point, const std::vector<std::string>& columns) {
  const Problem p = build_problem(c);
  if (c.start < 1 || c.start > p.pi.size())
    throw UsageError("'start' must lie in 1.." + std::to_string(p.pi.size()));
  const auto kernels = build_kernels(c, p);
  std::vector<TestFunction> fns;
  for (const auto& s : c.functions) fns.push_back(make_function(p.pi, s));

  std::ostringstream os;
  io::CsvWriter w(os, columns);
  const std::string header = os.str();
  for (std::size_t i = 0; i < ranged.size(); ++i) {
    if (ranged[i] == "S")
      w.cell(static_cast<std::int64_t>(point[i]));
    else
      w.cell(point[i]);
  }
  for (const auto& nk : kernels)
    for (const auto& d : c.diagnostics) {
      if (d == "mixing_time") {
        const auto m = mixing_time(nk.kernel, p.pi, dirac(nk.kernel, c.start - 1), c.mix_eps, c.mix_cap,
                                   c.joint_law ? Law::joint : Law::marginal);
        if (m.reached)
          w.cell(m.steps);
        else
          w.cell("NA");
      } else if (d == "variance") {
        for (const auto& f : fns) w.cell(asymptotic_variance(nk.kernel, p.pi, f).value);
      } else if (d == "spectrum") {
        const auto s = spectrum(nk.kernel, p.pi);
        w.cell(s.slem).cell(s.reversibilization_top);
      } else if (d == "conductance") {
        w.cell(conductance(nk.kernel, p.pi, conductance_mode(c, nk.kernel.size())));
      } else if (d == "moments") {
        const Moments m = moments(nk.kernel, p.pi);
        w.cell(m.product1).cell(m.increment1).cell(m.increment2);
      }
    }
  w.end_row();
  return os.str().substr(header.size());
}

int sweep_command(const Entries& entries) {
  const auto t0 = std::chrono::steady_clock::now();
  std::vector<std::string> ranged;
  std::vector<std::vector<double>> values;
  for (const auto& k : kSweepable) {
    auto it = entries.find(k);
    if (it != entries.end() && is_ranged(it->second)) {
      ranged.push_back(k);
      values.push_back(expand_range(it->second));
    }
  }
  for (const auto& [k, v] : entries)
    if (is_ranged(v) && std::find(kSweepable.begin(), kSweepable.end(), k) == kSweepable.end() &&
        k != "alg" && k != "diag" && k != "functions")
      throw UsageError("'" + k + "' cannot be ranged");
  if (ranged.size() > 2) throw UsageError("at most two parameters may be ranged in a sweep");
  if (entries.count("zeta_grid")) throw UsageError("use a ranged 'zeta_ratio' instead of 'zeta_grid' in a sweep");

  // cross product, first ranged key outermost
  std::vector<std::vector<double>> points{{}};
  for (const auto& vals : values) {
    std::vector<std::vector<double>> next;
    for (const auto& pt : points)
      for (double v : vals) {
        auto q = pt;
        q.push_back(v);
        next.push_back(std::move(q));
      }
    points = std::move(next);
  }
  const std::int64_t cap = entry_int(entries, "max_points", ExperimentConfig{}.max_points);
  if (static_cast<std::int64_t>(points.size()) > cap)
    throw UsageError("sweep grid has " + std::to_string(points.size()) + " points, above max_points = " +
                     std::to_string(cap));

  // validate every point before computing anything
  std::vector<ExperimentConfig> configs;
  for (const auto& pt : points) {
    Entries e = entries;
    for (std::size_t i = 0; i < ranged.size(); ++i)
      e[ranged[i]] = ranged[i] == "S" ? std::to_string(static_cast<std::int64_t>(std::llround(pt[i])))
                                      : io::number(pt[i]);
    configs.push_back(make_config(e));
  }
  const ExperimentConfig& base = configs.front();
  for (const auto& d : base.diagnostics)
    if (d == "convergence" || d == "estimator")
      throw UsageError("'" + d + "' is not a scalar diagnostic and cannot be swept");
  for (const auto& a : base.algorithms)
    if (std::count(base.algorithms.begin(), base.algorithms.end(), a) > 1)
      throw UsageError("algorithm '" + a + "' listed twice");
  std::vector<TestFunction> fns;
  {
    const Problem p0 = build_problem(configs.front());
    for (const auto& s : base.functions) fns.push_back(make_function(p0.pi, s));
  }
  const auto columns = sweep_columns(base, ranged, fns);
  std::ostringstream hs;
  io::CsvWriter hw(hs, columns);
  const std::string header = hs.str();

  const fs::path dir(base.outdir);
  const fs::path frag = dir / (".sweep_" + base.example);
  fs::create_directories(frag);

  std::vector<std::string> rows(points.size());
  std::vector<char> done(points.size(), 0);
  std::int64_t reused = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::ifstream in(frag / ("point_" + std::to_string(i) + ".csv"));
    if (!in) continue;
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string content = ss.str();
    if (content.rfind(header, 0) == 0 && content.size() > header.size()) {
      rows[i] = content.substr(header.size());
      done[i] = 1;
      ++reused;
    }
  }

  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr failure;
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= points.size()) return;
      if (done[i]) continue;
      {
        std::lock_guard<std::mutex> lk(err_mu);
        if (failure) return;
      }
      try {
        rows[i] = sweep_row(configs[i], ranged, points[i], columns);
        write_file(frag / ("point_" + std::to_string(i) + ".csv"), header + rows[i]);
      } catch (...) {
        std::lock_guard<std::mutex> lk(err_mu);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  unsigned workers = base.threads ? base.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, points.size()));
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::string csv = header;
  for (const auto& r : rows) csv += r;
  const std::string name = base.example + "_sweep.csv";
  write_file(dir / name, csv);

  json report;
  report["command"] = "sweep";
  report["example"] = base.example;
  report["version"] = kVersion;
  report["rng"] = kRngName;
  report["seed"] = base.seed;
  report["params"] = entries;
  report["ranged"] = ranged;
  report["points"] = points.size();
  report["points_reused"] = reused;
  report["files"] = json::array({name});
  report["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  write_file(dir / "report.json", report.dump(2) + "\n");
  return 0;
}

//------------------------------------------------------------------------------
// entry point
//------------------------------------------------------------------------------

struct Flags {
  std::string config;
  std::string example;
  std::map<std::string, std::string> values;
};

void add_common(CLI::App* app, Flags& f) {
  app->add_option("example", f.example, "ex1, ex2, ex3, ex4 or custom");
  app->add_option("--config,-c", f.config, "key = value config file (flags override it)");
  struct Opt {
    const char* flag;
    const char* key;
    const char* help;
  };
  static const Opt opts[] = {
      {"--S", "S", "state count (grid side for ex4)"},
      {"--rho", "rho", "ex1 valley weight"},
      {"--eps", "eps", "lazy proposal self-mass"},
      {"--contrast", "contrast", "ex4 max/min mass ratio"},
      {"--zeta-ratio", "zeta_ratio", "vorticity in units of zeta_max (list or range)"},
      {"--zeta-grid", "zeta_grid", "symmetric grid of n ratios over [-1, 1]"},
      {"--alpha", "alpha", "gw_alpha refresh probabilities"},
      {"--varrho", "varrho", "nrmhav switching rates"},
      {"--alg", "alg", "mh,gw,gw_alpha,lifted_gw,nrmh,nrmhav"},
      {"--diag", "diag", "convergence,mixing_time,variance,spectrum,conductance,moments,estimator"},
      {"--functions", "functions", "id, ind:k, poly:n, invpoly:n"},
      {"--proposal", "proposal", "custom example proposal: neighbor or lazy"},
      {"--target-file", "target_file", "custom example weights, one per line"},
      {"--out,-o", "out", "output directory"},
      {"--seed", "seed", "master seed"},
      {"--horizon", "horizon", "convergence horizon"},
      {"--mix-eps", "mix_eps", "mixing-time threshold"},
      {"--mix-cap", "mix_cap", "mixing-time iteration cap"},
      {"--mix-law", "mix_law", "lifted chains: marginal or joint law"},
      {"--conductance-mode", "conductance_mode", "auto, exhaustive or arcs"},
      {"--start", "start", "1-based start state"},
      {"--svg", "svg", "write SVG plots (true/false)"},
      {"--threads", "threads", "worker threads (0: all cores)"},
      {"--max-points", "max_points", "sweep grid cap"},
      {"--replicas", "replicas", "estimator replicas"},
      {"--length", "length", "estimator path length"},
      {"--burn-in", "burn_in", "estimator burn-in"},
      {"--export-kernels", "export_kernels", "write kernel matrices with JSON sidecars"},
  };
  for (const auto& o : opts) {
    const std::string key = o.key;
    app->add_option_function<std::string>(o.flag, [&f, key](const std::string& v) { f.values[key] = v; },
                                          o.help);
  }
}

Entries merge(const Flags& f) {
  Entries e;
  if (!f.config.empty()) e = read_config_file(f.config);
  if (!f.example.empty()) e["example"] = f.example;
  for (const auto& [k, v] : f.values) e[k] = v;
  return e;
}

int report_error(const std::string& kind, const std::string& message, int code) {
  json j{{"error", kind}, {"message", message}, {"exit_code", code}};
  std::cerr << j.dump() << "\n";
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Exact analysis of reversible and non-reversible MCMC kernels", "nrmc"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  Flags run_f, sweep_f, val_f;
  auto* run = app.add_subcommand("run", "evaluate one configuration");
  auto* sweep = app.add_subcommand("sweep", "evaluate a grid of up to two ranged parameters");
  auto* val = app.add_subcommand("validate-config", "check a configuration and print it resolved");
  add_common(run, run_f);
  add_common(sweep, sweep_f);
  add_common(val, val_f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("usage", e.what(), 2);
  }

  try {
    if (run->parsed()) return run_command(make_config(merge(run_f)));
    if (sweep->parsed()) return sweep_command(merge(sweep_f));
    const ExperimentConfig c = make_config(merge(val_f));
    build_problem(c);
    json j{{"valid", true}, {"params", c.resolved}};
    std::cout << j.dump(2) << "\n";
    return 0;
  } catch (const UsageError& e) {
    return report_error("usage", e.what(), 2);
  } catch (const ParameterError& e) {
    return report_error("usage", e.what(), 2);
  } catch (const NumericalError& e) {
    json j{{"error", "numerical"}, {"message", e.what()}, {"condition_estimate", e.condition_estimate()}, {"exit_code", 3}};
    std::cerr << j.dump() << "\n";
    return 3;
  } catch (const AssumptionViolation& e) {
    json j{{"error", "assumption"}, {"message", e.what()}, {"assumption", e.assumption()},
           {"row", e.row() + 1}, {"col", e.col() + 1}, {"residual", e.residual()}, {"exit_code", 3}};
    std::cerr << j.dump() << "\n";
    return 3;
  } catch (const std::exception& e) {
    return report_error("failure", e.what(), 3);
  }
}

}  // namespace nrmc::cli
