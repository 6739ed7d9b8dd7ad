#include "nrmc/analysis.hpp"

#include "nrmc/kernels.hpp"
#include "nrmc/targets.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/LU>
#include <Eigen/QR>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <set>

namespace nrmc {

//------------------------------------------------------------------------------
// Propagator
//------------------------------------------------------------------------------

Propagator::Propagator(const Matrix& P) : n_(P.rows()) {
  const Index nnz = (P.array() != 0.0).count();
  use_sparse_ = n_ >= 16 && nnz * 5 <= n_ * n_;
  if (use_sparse_) {
    sparse_ = P.sparseView();
    sparse_t_ = P.transpose().sparseView();
  } else {
    dense_ = P;
    dense_t_ = P.transpose();
  }
  scratch_.resize(n_);
}

void Propagator::step(Vector& mu) const {
  if (mu.size() != n_) throw ParameterError("Propagator::step: dimension mismatch");
  if (use_sparse_)
    scratch_.noalias() = sparse_t_ * mu;
  else
    scratch_.noalias() = dense_t_ * mu;
  mu.swap(scratch_);
}

void Propagator::apply(Vector& f) const {
  if (f.size() != n_) throw ParameterError("Propagator::apply: dimension mismatch");
  if (use_sparse_)
    scratch_.noalias() = sparse_ * f;
  else
    scratch_.noalias() = dense_ * f;
  f.swap(scratch_);
}

//------------------------------------------------------------------------------
// Convergence
//------------------------------------------------------------------------------

namespace {

void check_distribution(const TransitionKernel& P, const Vector& mu0, const char* what) {
  if (mu0.size() != P.size())
    throw ParameterError(std::string(what) + ": initial law has length " +
                         std::to_string(mu0.size()) + ", kernel has " + std::to_string(P.size()));
  if (!mu0.allFinite() || mu0.minCoeff() < 0.0 || std::abs(mu0.sum() - 1.0) > 1e-9)
    throw ParameterError(std::string(what) + ": initial law is not a probability vector");
}

}  // namespace

ConvergenceReport convergence_curve(const TransitionKernel& P, const Target& pi, const Vector& mu0,
                                    std::int64_t horizon) {
  check_distribution(P, mu0, "convergence_curve");
  if (horizon < 0) throw ParameterError("convergence_curve: horizon must be >= 0");
  const Target full = target_for(P, pi);
  const bool lifted = P.lifted();
  const Vector& base = lifted ? Vector(marginalize(full.probs())) : full.probs();

  ConvergenceReport rep;
  rep.marginalized = lifted;
  const auto n = static_cast<std::size_t>(horizon + 1);
  rep.times.reserve(n);
  rep.tv.reserve(n);
  rep.l2.reserve(n);

  Propagator prop(P.matrix());
  Vector mu = mu0;
  for (std::int64_t t = 0; t <= horizon; ++t) {
    if (t > 0) prop.step(mu);
    rep.times.push_back(t);
    if (lifted) {
      const Vector m = marginalize(mu);
      rep.tv.push_back(tv_distance(m, base));
      rep.l2.push_back(l2_distance(m, base));
      rep.lifted_tv.push_back(tv_distance(mu, full.probs()));
      rep.lifted_l2.push_back(l2_distance(mu, full.probs()));
    } else {
      rep.tv.push_back(tv_distance(mu, base));
      rep.l2.push_back(l2_distance(mu, base));
    }
  }
  return rep;
}

MixingTime mixing_time(const TransitionKernel& P, const Target& pi, const Vector& mu0, double eps,
                       std::int64_t cap, Law law) {
  check_distribution(P, mu0, "mixing_time");
  if (!(eps > 0.0)) throw ParameterError("mixing_time: eps must be > 0");
  if (cap < 0) throw ParameterError("mixing_time: cap must be >= 0");
  const Target full = target_for(P, pi);
  const bool lifted = P.lifted();
  const Vector base = lifted ? Vector(marginalize(full.probs())) : full.probs();
  const Index S = base.size();

  auto distance = [&](const Vector& mu) {
    if (!lifted) return tv_distance(mu, base);
    if (law == Law::joint) return tv_distance(mu, full.probs());
    return 0.5 * (mu.head(S) + mu.tail(S) - base).cwiseAbs().sum();
  };

  Propagator prop(P.matrix());
  Vector mu = mu0;
  MixingTime out;
  out.cap = cap;
  for (std::int64_t t = 0; t <= cap; ++t) {
    if (t > 0) prop.step(mu);
    if (distance(mu) <= eps) {
      out.steps = t;
      out.reached = true;
      return out;
    }
  }
  out.steps = cap;
  return out;
}

Vector dirac(const TransitionKernel& P, Index x, int zeta) {
  if (x < 0 || x >= P.base_size()) throw ParameterError("dirac: state out of range");
  Vector mu = Vector::Zero(P.size());
  mu(P.lifted() ? lifted_index(x, zeta, P.base_size()) : x) = 1.0;
  return mu;
}

//------------------------------------------------------------------------------
// Variance
//------------------------------------------------------------------------------

namespace {

constexpr double kLuRcondFloor = 1e-13;
constexpr double kInvarianceTol = 1e-9;

void require_invariant(const TransitionKernel& P, const Target& full) {
  const Vector r = P.matrix().transpose() * full.probs() - full.probs();
  Index arg = 0;
  const double worst = r.cwiseAbs().maxCoeff(&arg);
  if (worst > kInvarianceTol)
    throw AssumptionViolation("pi-invariance of the kernel (pi P = pi)", arg, arg, worst);
}

}  // namespace

double variance_under(const Target& pi, const Vector& f) {
  if (f.size() != pi.size()) throw ParameterError("variance_under: length mismatch");
  const double mean = pi.probs().dot(f);
  return pi.probs().dot((f.array() - mean).square().matrix());
}

VarianceReport asymptotic_variance(const TransitionKernel& P, const Target& pi,
                                   const TestFunction& f) {
  const Target full = target_for(P, pi);
  const TestFunction ff = function_for(P, f);
  require_invariant(P, full);
  const Vector& w = full.probs();
  const Index n = P.size();

  const Vector g = ff.values.array() - w.dot(ff.values);
  Matrix A = Matrix::Identity(n, n) - P.matrix();
  A.rowwise() += w.transpose();

  VarianceReport rep;
  rep.function = ff.label;
  rep.kernel = P.label();

  Eigen::PartialPivLU<Matrix> lu(A);
  rep.rcond = lu.rcond();
  Vector z;
  if (rep.rcond >= kLuRcondFloor) {
    z = lu.solve(g);
  } else {
    // Reducible chains (frozen momentum, deterministic rotations) leave
    // I - P + Pi singular; the system stays consistent for lifted functions
    // and any solution gives the same value.
    Eigen::CompleteOrthogonalDecomposition<Matrix> cod(A);
    z = cod.solve(g);
    rep.least_squares = true;
    const double residual = (A * z - g).norm();
    if (residual > 1e-8 * (1.0 + g.norm()))
      throw NumericalError("asymptotic_variance: I - P + Pi is singular and the system is "
                           "inconsistent (residual " + std::to_string(residual) + ")",
                           rep.rcond);
  }
  const Vector centred = z.array() - w.dot(g);
  const double quad = w.dot(centred.cwiseProduct(g));
  const double norm2 = w.dot(g.cwiseProduct(g));
  rep.value = 2.0 * quad - norm2;
  return rep;
}

double autocorrelation(const TransitionKernel& P, const Target& pi, const TestFunction& f,
                       std::int64_t t) {
  if (t < 0) throw ParameterError("autocorrelation: lag must be >= 0");
  const Target full = target_for(P, pi);
  const TestFunction ff = function_for(P, f);
  const Vector& w = full.probs();
  const double var = variance_under(full, ff.values);
  const double scale = std::max(1.0, ff.values.cwiseAbs().maxCoeff());
  if (var <= 1e-15 * scale * scale)
    throw DegenerateInputError("autocorrelation: f is constant under pi");
  const double mean = w.dot(ff.values);
  Vector h = ff.values;
  Propagator prop(P.matrix());
  for (std::int64_t k = 0; k < t; ++k) prop.apply(h);
  return (w.dot(ff.values.cwiseProduct(h)) - mean * mean) / var;
}

double lag_moment(const TransitionKernel& P, const Target& pi, int lag, MomentKind kind) {
  if (lag != 1 && lag != 2) throw ParameterError("lag_moment: lag must be 1 or 2");
  const Target full = target_for(P, pi);
  const Index S = P.base_size();
  Vector labels(S);
  for (Index i = 0; i < S; ++i) labels(i) = static_cast<double>(i + 1);
  const Vector x = function_for(P, custom_function(labels, "label")).values;
  const Vector& w = full.probs();

  Propagator prop(P.matrix());
  Vector h1 = x;
  for (int k = 0; k < lag; ++k) prop.apply(h1);
  if (kind == MomentKind::product) return w.dot(x.cwiseProduct(h1));

  Vector h2 = x.cwiseProduct(x);
  for (int k = 0; k < lag; ++k) prop.apply(h2);
  const Vector inner = x.cwiseProduct(x) - 2.0 * x.cwiseProduct(h1) + h2;
  return w.dot(inner);
}

VLambda v_lambda(const TransitionKernel& P, const Target& pi, const TestFunction& f, double lambda,
                 std::int64_t terms) {
  if (!(lambda >= 0.0 && lambda < 1.0)) throw ParameterError("v_lambda: lambda must lie in [0, 1)");
  const Target full = target_for(P, pi);
  const TestFunction ff = function_for(P, f);
  const Vector& w = full.probs();
  const Vector g = ff.values.array() - w.dot(ff.values);
  const double norm2 = w.dot(g.cwiseProduct(g));
  const double coupling = std::sqrt(norm2) * g.cwiseAbs().maxCoeff();

  auto tail = [&](std::int64_t K) {
    return 2.0 * std::pow(lambda, static_cast<double>(K + 1)) / (1.0 - lambda) * coupling;
  };

  std::int64_t K = terms;
  if (K <= 0) {
    K = 0;
    const double goal = 1e-12 * std::max(1.0, norm2);
    if (lambda > 0.0 && coupling > 0.0) {
      const double need = std::log(goal * (1.0 - lambda) / (2.0 * coupling)) / std::log(lambda);
      K = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::ceil(need)));
      while (tail(K) > goal) ++K;
    }
  }
  if (K > 100'000'000) throw ResourceError("v_lambda: truncation needs too many terms");

  VLambda out;
  out.terms = K;
  out.truncation_bound = lambda > 0.0 ? tail(K) : 0.0;
  double sum = norm2;
  double power = 1.0;
  Vector h = g;
  Propagator prop(P.matrix());
  for (std::int64_t k = 1; k <= K; ++k) {
    prop.apply(h);
    power *= lambda;
    sum += 2.0 * power * w.dot(g.cwiseProduct(h));
  }
  out.value = sum;
  return out;
}

//------------------------------------------------------------------------------
// Spectra
//------------------------------------------------------------------------------

namespace {

Vector sqrt_weights(const Target& full, const char* what) {
  if (full.probs().minCoeff() <= 0.0)
    throw ParameterError(std::string(what) + ": target must be strictly positive");
  return full.probs().cwiseSqrt();
}

Vector symmetric_eigenvalues(Matrix sym, const char* what) {
  sym = 0.5 * (sym + sym.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError(std::string(what) + ": eigensolver failed", 0.0);
  return es.eigenvalues();
}

}  // namespace

Vector reversible_eigenvalues(const TransitionKernel& P, const Target& pi) {
  const Target full = target_for(P, pi);
  const Vector s = sqrt_weights(full, "reversible_eigenvalues");
  const Matrix sym = s.asDiagonal() * P.matrix() * s.cwiseInverse().asDiagonal();
  return symmetric_eigenvalues(sym, "reversible_eigenvalues");
}

double reversibilization_top(const TransitionKernel& P, const Target& pi) {
  const Target full = target_for(P, pi);
  const Vector s = sqrt_weights(full, "reversibilization_top");
  const Matrix M = mult_reversibilization(P, full).matrix();
  Matrix sym = s.asDiagonal() * M * s.cwiseInverse().asDiagonal();
  sym -= s * s.transpose();  // removes the eigenvalue 1 of the constants
  return symmetric_eigenvalues(std::move(sym), "reversibilization_top").maxCoeff();
}

SpectralReport spectrum(const TransitionKernel& P, const Target& pi) {
  const Target full = target_for(P, pi);
  SpectralReport rep;
  const bool positive = full.probs().minCoeff() > 0.0;
  if (positive && is_reversible(P, full, 1e-13)) {
    rep.eigenvalues = reversible_eigenvalues(P, full).cast<std::complex<double>>();
  } else {
    Eigen::EigenSolver<Matrix> es(P.matrix(), false);
    if (es.info() != Eigen::Success) throw NumericalError("spectrum: eigensolver failed", 0.0);
    rep.eigenvalues = es.eigenvalues();
  }
  // decreasing modulus, then real part, then imaginary part
  std::vector<std::complex<double>> ev(rep.eigenvalues.data(), rep.eigenvalues.data() + rep.eigenvalues.size());
  std::sort(ev.begin(), ev.end(), [](const auto& a, const auto& b) {
    if (std::abs(a) != std::abs(b)) return std::abs(a) > std::abs(b);
    if (a.real() != b.real()) return a.real() > b.real();
    return a.imag() > b.imag();
  });
  rep.eigenvalues = Eigen::Map<Eigen::VectorXcd>(ev.data(), static_cast<Index>(ev.size()));
  Index one = 0;
  (rep.eigenvalues.array() - 1.0).abs().minCoeff(&one);
  double slem = 0.0;
  for (Index i = 0; i < rep.eigenvalues.size(); ++i)
    if (i != one) slem = std::max(slem, std::abs(rep.eigenvalues(i)));
  rep.slem = slem;
  rep.spectral_gap = 1.0 - slem;
  rep.reversibilization_top = positive ? reversibilization_top(P, full)
                                       : std::numeric_limits<double>::quiet_NaN();
  return rep;
}

//------------------------------------------------------------------------------
// Conductance
//------------------------------------------------------------------------------

namespace {

constexpr double kHalfMassSlack = 1e-13;

// Quotient of a set recomputed from scratch with a fixed summation order, so
// that different enumeration strategies report bit-identical minima.
struct SetQuotient {
  double value = std::numeric_limits<double>::infinity();
  bool admissible = false;
};

SetQuotient quotient(const Matrix& flux, const Vector& w, const std::vector<char>& in) {
  const Index n = w.size();
  double mass = 0.0;
  for (Index x = 0; x < n; ++x)
    if (in[x]) mass += w(x);
  SetQuotient q;
  if (mass <= 0.0 || mass >= 0.5 - kHalfMassSlack) return q;
  double out = 0.0;
  for (Index x = 0; x < n; ++x) {
    if (!in[x]) continue;
    for (Index y = 0; y < n; ++y)
      if (!in[y]) out += flux(x, y);
  }
  q.value = out / mass;
  q.admissible = true;
  return q;
}

double conductance_exhaustive(const Matrix& flux, const Vector& w) {
  const Index n = w.size();
  if (n > kExhaustiveConductanceLimit)
    throw ResourceError("conductance: exhaustive mode is limited to " +
                        std::to_string(kExhaustiveConductanceLimit) +
                        " states; use arcs mode for larger circles");
  // Gray-code walk with incremental boundary flow; near-minimal sets are
  // re-evaluated canonically at the end.
  const Vector row_out = flux.rowwise().sum();
  std::vector<char> in(static_cast<std::size_t>(n), 0);
  double mass = 0.0, out = 0.0, best = std::numeric_limits<double>::infinity();
  std::vector<std::pair<std::uint32_t, double>> candidates;
  const std::uint64_t total = std::uint64_t{1} << n;
  std::uint32_t mask = 0;
  for (std::uint64_t i = 1; i < total; ++i) {
    const int v = std::countr_zero(i);
    double to_set = 0.0, from_set = 0.0;
    for (Index y = 0; y < n; ++y)
      if (in[y] && y != v) {
        to_set += flux(v, y);
        from_set += flux(y, v);
      }
    if (!in[v]) {
      out += row_out(v) - flux(v, v) - to_set - from_set;
      mass += w(v);
      in[v] = 1;
    } else {
      out -= row_out(v) - flux(v, v) - to_set - from_set;
      mass -= w(v);
      in[v] = 0;
    }
    mask ^= (std::uint32_t{1} << v);
    if (mass <= 0.0 || mass >= 0.5 - kHalfMassSlack) continue;
    const double q = out / mass;
    if (q <= best * (1.0 + 1e-9) + 1e-15) {
      if (q < best) {
        best = q;
        const double cut = best * (1.0 + 1e-9) + 1e-15;
        std::erase_if(candidates, [cut](const auto& c) { return c.second > cut; });
      }
      candidates.emplace_back(mask, q);
    }
  }
  double result = std::numeric_limits<double>::infinity();
  std::vector<char> member(static_cast<std::size_t>(n));
  for (const auto& [m, approx] : candidates) {
    (void)approx;
    for (Index x = 0; x < n; ++x) member[x] = static_cast<char>((m >> x) & 1u);
    const SetQuotient q = quotient(flux, w, member);
    if (q.admissible) result = std::min(result, q.value);
  }
  return result;
}

double conductance_arcs(const Matrix& flux, const Vector& w) {
  const Index n = w.size();
  double result = std::numeric_limits<double>::infinity();
  std::vector<char> member(static_cast<std::size_t>(n));
  for (Index a = 0; a < n; ++a)
    for (Index len = 1; len < n; ++len) {
      std::fill(member.begin(), member.end(), 0);
      for (Index k = 0; k < len; ++k) member[(a + k) % n] = 1;
      const SetQuotient q = quotient(flux, w, member);
      if (q.admissible) result = std::min(result, q.value);
    }
  return result;
}

}  // namespace

double conductance(const TransitionKernel& P, const Target& pi, ConductanceMode mode) {
  const Target full = target_for(P, pi);
  const Vector& w = full.probs();
  const Matrix flux = w.asDiagonal() * P.matrix();
  const double h = mode == ConductanceMode::exhaustive ? conductance_exhaustive(flux, w)
                                                       : conductance_arcs(flux, w);
  if (!std::isfinite(h)) throw DegenerateInputError("conductance: no set with pi(A) < 1/2");
  return h;
}

std::pair<double, double> cheeger_bounds(double h) {
  if (!(h >= 0.0 && h <= 1.0)) throw ParameterError("cheeger_bounds: h must lie in [0, 1]");
  return {1.0 - 2.0 * h, 1.0 - h * h};
}

//------------------------------------------------------------------------------
// Path bound
//------------------------------------------------------------------------------

PathBound odd_path_bound(const TransitionKernel& P, const Target& pi,
                         const std::vector<StatePath>& paths) {
  const Target full = target_for(P, pi);
  const Vector& w = full.probs();
  const Index n = P.size();
  if (static_cast<Index>(paths.size()) != n)
    throw ParameterError("odd_path_bound: need exactly one path per state");

  std::vector<char> seen(static_cast<std::size_t>(n), 0);
  std::map<std::pair<Index, Index>, double> load;
  PathBound out;
  out.lengths.reserve(paths.size());
  for (const StatePath& path : paths) {
    if (path.size() < 2 || path.front() != path.back())
      throw ParameterError("odd_path_bound: paths must be closed");
    const Index x = path.front();
    if (x < 0 || x >= n || seen[x]) throw ParameterError("odd_path_bound: paths must start at distinct states");
    seen[x] = 1;
    if ((path.size() - 1) % 2 == 0) throw ParameterError("odd_path_bound: path of state " +
                                                         std::to_string(x + 1) + " has even length");
    double length = 0.0;
    std::set<std::pair<Index, Index>> edges;
    for (std::size_t k = 0; k + 1 < path.size(); ++k) {
      const Index a = path[k], b = path[k + 1];
      if (a < 0 || a >= n || b < 0 || b >= n || P(a, b) <= 0.0)
        throw ParameterError("odd_path_bound: edge (" + std::to_string(a + 1) + ", " +
                             std::to_string(b + 1) + ") has zero probability");
      length += 1.0 / (w(a) * P(a, b));
      edges.insert({a, b});
    }
    out.lengths.push_back(length);
    for (const auto& e : edges) load[e] += length * w(x);
  }
  for (const auto& [edge, value] : load) out.iota = std::max(out.iota, value);
  out.eig_lower = -1.0 + 2.0 / out.iota;
  return out;
}

std::vector<StatePath> circle_canonical_paths(Index S) {
  if (S < 3 || S % 2 == 0) throw ParameterError("circle_canonical_paths: S must be odd and >= 3");
  std::vector<StatePath> paths;
  StatePath circuit;
  for (Index x = 0; x < S; ++x) circuit.push_back(x);
  circuit.push_back(0);
  paths.push_back(std::move(circuit));
  for (Index x = 1; x < S; ++x) paths.push_back({x, x});
  return paths;
}

//------------------------------------------------------------------------------
// Refresh-rate search
//------------------------------------------------------------------------------

AlphaSearch alpha_star_search(const std::function<TransitionKernel(double)>& builder,
                              const Target& pi, const Vector& mu0, std::int64_t reference_tau,
                              double eps, std::int64_t cap, Law law) {
  AlphaSearch out;
  auto qualifies = [&](double alpha, std::int64_t& tau) {
    ++out.evaluations;
    const MixingTime m = mixing_time(builder(alpha), pi, mu0, eps, cap, law);
    tau = m.steps;
    return m.reached && m.steps <= reference_tau;
  };
  constexpr int kCoarse = 20;      // step 0.05
  constexpr int kFinePerCell = 50; // step 0.001
  for (int k = 1; k <= kCoarse; ++k) {
    std::int64_t tau = 0;
    if (!qualifies(0.05 * k, tau)) continue;
    for (int j = 1; j < kFinePerCell; ++j) {
      const double alpha = 0.05 * (k - 1) + 0.001 * j;
      std::int64_t fine_tau = 0;
      if (qualifies(alpha, fine_tau)) {
        out.alpha = alpha;
        out.tau = fine_tau;
        return out;
      }
    }
    out.alpha = 0.05 * k;
    out.tau = tau;
    return out;
  }
  return out;
}

}  // namespace nrmc
