#include "nrmc/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace nrmc {

namespace {

void require_same_size(Index a, Index b, const char* what) {
  if (a != b) throw ParameterError(std::string(what) + ": dimension mismatch");
}

// Q o A off the diagonal, rejected mass on the diagonal.
Matrix apply_acceptance(const ProposalKernel& Q, const Matrix& A) {
  const Index n = Q.size();
  Matrix p = Q.matrix().cwiseProduct(A);
  for (Index x = 0; x < n; ++x) {
    p(x, x) = 0.0;
    p(x, x) = std::max(0.0, 1.0 - p.row(x).sum());
  }
  return p;
}

void require_pi_reversible(const ProposalKernel& Q, const Target& pi) {
  const Index n = Q.size();
  double worst = 0.0;
  Index wx = 0, wy = 0;
  for (Index x = 0; x < n; ++x)
    for (Index y = 0; y < n; ++y) {
      const double d = std::abs(pi(x) * Q(x, y) - pi(y) * Q(y, x));
      if (d > worst) {
        worst = d;
        wx = x;
        wy = y;
      }
    }
  if (worst > kReversibilityTol)
    throw AssumptionViolation("pi-reversibility of the proposal Q", wx, wy, worst);
}

std::string fmt(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

}  // namespace

Target lift_target(const Target& base) {
  const Index S = base.size();
  Vector p(2 * S);
  p << 0.5 * base.probs(), 0.5 * base.probs();
  return Target(std::move(p), "lifted(" + base.label() + ")", Topology::lifted, base.side());
}

TestFunction lift_function(const TestFunction& f) {
  TestFunction out = f;
  out.values.resize(2 * f.values.size());
  out.values << f.values, f.values;
  return out;
}

Target target_for(const TransitionKernel& P, const Target& pi) {
  if (pi.size() == P.size()) return pi;
  if (P.lifted() && pi.size() == P.base_size()) return lift_target(pi);
  throw ParameterError("target size " + std::to_string(pi.size()) +
                       " does not match kernel size " + std::to_string(P.size()));
}

TestFunction function_for(const TransitionKernel& P, const TestFunction& f) {
  if (f.values.size() == P.size()) return f;
  if (P.lifted() && f.values.size() == P.base_size()) return lift_function(f);
  throw ParameterError("function length " + std::to_string(f.values.size()) +
                       " does not match kernel size " + std::to_string(P.size()));
}

Matrix acceptance_matrix(const Target& pi, const ProposalKernel& Q, const Matrix& gamma) {
  const Index n = pi.size();
  require_same_size(Q.size(), n, "acceptance_matrix");
  require_same_size(gamma.rows(), n, "acceptance_matrix");
  Matrix a = Matrix::Ones(n, n);
  for (Index x = 0; x < n; ++x)
    for (Index y = 0; y < n; ++y) {
      if (x == y) continue;
      const double den = pi(x) * Q(x, y);
      if (den == 0.0) continue;
      const double r = (gamma(x, y) + pi(y) * Q(y, x)) / den;
      a(x, y) = std::clamp(r, 0.0, 1.0);
    }
  return a;
}

TransitionKernel mh(const Target& pi, const ProposalKernel& Q) {
  require_same_size(Q.size(), pi.size(), "mh");
  if (!Q.has_symmetric_structure()) {
    const Matrix& q = Q.matrix();
    for (Index x = 0; x < q.rows(); ++x)
      for (Index y = 0; y < q.cols(); ++y)
        if ((q(x, y) == 0.0) != (q(y, x) == 0.0))
          throw AssumptionViolation("symmetric structure Q(x,y) = 0 => Q(y,x) = 0", x, y,
                                    std::max(q(x, y), q(y, x)));
  }
  const Matrix zero = Matrix::Zero(pi.size(), pi.size());
  return TransitionKernel(apply_acceptance(Q, acceptance_matrix(pi, Q, zero)), Space::marginal,
                          "mh");
}

TransitionKernel guided_walk(const Target& pi, Index S) {
  if (pi.topology() != Topology::circle) throw ParameterError("guided_walk: target must be a circle");
  if (pi.size() != S) throw ParameterError("guided_walk: target size differs from S");
  Matrix p = Matrix::Zero(2 * S, 2 * S);
  for (Index x = 0; x < S; ++x) {
    for (int xi : {1, -1}) {
      const Index y = (x + S + xi) % S;
      const double a = pi(x) > 0.0 ? std::min(1.0, pi(y) / pi(x)) : 1.0;
      const Index from = lifted_index(x, xi, S);
      p(from, lifted_index(y, xi, S)) += a;
      p(from, lifted_index(x, -xi, S)) += 1.0 - a;
    }
  }
  return TransitionKernel(std::move(p), Space::lifted, "gw");
}

TransitionKernel flip_kernel(Index S) {
  if (S < 1) throw ParameterError("flip_kernel: S must be >= 1");
  Matrix p = Matrix::Zero(2 * S, 2 * S);
  for (Index x = 0; x < S; ++x)
    for (int a : {1, -1})
      for (int b : {1, -1}) p(lifted_index(x, a, S), lifted_index(x, b, S)) = 0.5;
  return TransitionKernel(std::move(p), Space::lifted, "flip");
}

TransitionKernel gw_alpha(const TransitionKernel& gw, double alpha) {
  if (!gw.lifted()) throw ParameterError("gw_alpha: kernel must be lifted");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ParameterError("gw_alpha: alpha must lie in [0, 1]");
  const Index n = gw.size();
  const Matrix refresh =
      alpha * flip_kernel(gw.base_size()).matrix() + (1.0 - alpha) * Matrix::Identity(n, n);
  auto params = gw.params();
  params["alpha"] = alpha;
  return TransitionKernel(gw.matrix() * refresh, Space::lifted, "gw_alpha(" + fmt(alpha) + ")",
                          std::move(params));
}

TransitionKernel nrmh(const Target& pi, const ProposalKernel& Q, const VorticityField& gamma) {
  require_valid(validate(gamma, pi, Q));
  return TransitionKernel(apply_acceptance(Q, acceptance_matrix(pi, Q, gamma.matrix)),
                          Space::marginal, "nrmh", {{"zeta", gamma.zeta}});
}

TransitionKernel nrmhav(const Target& pi, const ProposalKernel& Q, const VorticityField& gamma,
                        double varrho) {
  if (!(varrho >= 0.0 && varrho <= 1.0)) throw ParameterError("nrmhav: varrho must lie in [0, 1]");
  require_same_size(Q.size(), pi.size(), "nrmhav");
  require_pi_reversible(Q, pi);
  require_valid(validate(gamma, pi, Q));
  const Index S = pi.size();
  const Matrix tp = Q.matrix().cwiseProduct(acceptance_matrix(pi, Q, gamma.matrix));
  const Matrix tm = Q.matrix().cwiseProduct(acceptance_matrix(pi, Q, -gamma.matrix));
  const Vector rp = varrho * (Vector::Ones(S) - tp.rowwise().sum()).cwiseMax(0.0);
  const Vector rm = varrho * (Vector::Ones(S) - tm.rowwise().sum()).cwiseMax(0.0);
  TransitionKernel k = generic_lifted(tp, tm, rp, rm, pi, "nrmhav");
  return TransitionKernel(k.matrix(), Space::lifted, "nrmhav(" + fmt(varrho) + ")",
                          {{"zeta", gamma.zeta}, {"varrho", varrho}});
}

TransitionKernel generic_lifted(const Matrix& t_plus, const Matrix& t_minus,
                                const Vector& rate_plus, const Vector& rate_minus,
                                const Target& pi, std::string label) {
  const Index S = pi.size();
  if (t_plus.rows() != S || t_plus.cols() != S || t_minus.rows() != S || t_minus.cols() != S ||
      rate_plus.size() != S || rate_minus.size() != S)
    throw ParameterError("generic_lifted: dimension mismatch");
  if (t_plus.minCoeff() < 0.0 || t_minus.minCoeff() < 0.0)
    throw ParameterError("generic_lifted: sub-kernels must be non-negative");

  double worst = 0.0;
  Index wx = 0, wy = 0;
  for (Index x = 0; x < S; ++x)
    for (Index y = 0; y < S; ++y) {
      const double d = std::abs(pi(x) * t_plus(x, y) - pi(y) * t_minus(y, x));
      if (d > worst) {
        worst = d;
        wx = x;
        wy = y;
      }
    }
  if (worst > kStochasticTol)
    throw AssumptionViolation("skew-detailed balance pi(x) T+(x,y) = pi(y) T-(y,x)", wx, wy, worst);

  const Vector mass_p = t_plus.rowwise().sum();
  const Vector mass_m = t_minus.rowwise().sum();
  for (Index x = 0; x < S; ++x) {
    for (int z : {1, -1}) {
      const double rate = z > 0 ? rate_plus(x) : rate_minus(x);
      const double room = 1.0 - (z > 0 ? mass_p(x) : mass_m(x));
      if (rate < -kStochasticTol || rate > room + kStochasticTol)
        throw AssumptionViolation("switching rate 0 <= rate(x) <= 1 - T(x, S)", x, x,
                                  rate < 0.0 ? -rate : rate - room);
    }
    const double balance = (rate_plus(x) - rate_minus(x)) - (mass_m(x) - mass_p(x));
    if (std::abs(balance) > kStochasticTol)
      throw AssumptionViolation("rate balance rate+(x) - rate-(x) = T-(x, S) - T+(x, S)", x, x,
                                std::abs(balance));
  }

  Matrix p = Matrix::Zero(2 * S, 2 * S);
  for (Index x = 0; x < S; ++x) {
    for (int z : {1, -1}) {
      const Matrix& t = z > 0 ? t_plus : t_minus;
      const double rate = std::max(0.0, z > 0 ? rate_plus(x) : rate_minus(x));
      const Index from = lifted_index(x, z, S);
      for (Index y = 0; y < S; ++y) p(from, lifted_index(y, z, S)) += t(x, y);
      p(from, lifted_index(x, -z, S)) += rate;
      p(from, from) += std::max(0.0, 1.0 - rate - (z > 0 ? mass_p(x) : mass_m(x)));
    }
  }
  return TransitionKernel(std::move(p), Space::lifted, std::move(label));
}

std::pair<Matrix, Matrix> gw_subkernels(const Target& pi, Index S) {
  if (pi.size() != S) throw ParameterError("gw_subkernels: target size differs from S");
  Matrix tp = Matrix::Zero(S, S), tm = Matrix::Zero(S, S);
  for (Index x = 0; x < S; ++x) {
    const Index up = (x + 1) % S, down = (x + S - 1) % S;
    tp(x, up) = pi(x) > 0.0 ? std::min(1.0, pi(up) / pi(x)) : 1.0;
    tm(x, down) = pi(x) > 0.0 ? std::min(1.0, pi(down) / pi(x)) : 1.0;
  }
  return {tp, tm};
}

TransitionKernel lifted_gw(const Target& pi, Index S) {
  if (pi.topology() != Topology::circle) throw ParameterError("lifted_gw: target must be a circle");
  auto [tp, tm] = gw_subkernels(pi, S);
  const Vector mp = tp.rowwise().sum(), mm = tm.rowwise().sum();
  const Vector rp = (mm - mp).cwiseMax(0.0);
  const Vector rm = (mp - mm).cwiseMax(0.0);
  return generic_lifted(tp, tm, rp, rm, pi, "lifted_gw");
}

TransitionKernel adjoint(const TransitionKernel& P, const Target& pi) {
  const Target t = target_for(P, pi);
  const Vector& w = t.probs();
  if (w.minCoeff() <= 0.0) throw ParameterError("adjoint: target must be strictly positive");
  Matrix a = w.cwiseInverse().asDiagonal() * P.matrix().transpose() * w.asDiagonal();
  return TransitionKernel(std::move(a), P.space(), "adjoint(" + P.label() + ")", P.params());
}

TransitionKernel mult_reversibilization(const TransitionKernel& P, const Target& pi) {
  const TransitionKernel a = adjoint(P, pi);
  return TransitionKernel(P.matrix() * a.matrix(), P.space(), "PP*(" + P.label() + ")",
                          P.params());
}

double reversibility_defect(const Matrix& P, const Vector& pi) {
  require_same_size(P.rows(), pi.size(), "reversibility_defect");
  const Matrix flux = pi.asDiagonal() * P;
  return (flux - flux.transpose()).cwiseAbs().maxCoeff();
}

bool is_reversible(const TransitionKernel& P, const Target& pi, double tol) {
  return reversibility_defect(P.matrix(), target_for(P, pi).probs()) <= tol;
}

double stationarity_defect(const TransitionKernel& P, const Target& pi) {
  const Vector w = target_for(P, pi).probs();
  return (P.matrix().transpose() * w - w).cwiseAbs().maxCoeff();
}

Vector marginalize(const Vector& lifted) {
  if (lifted.size() % 2 != 0) throw ParameterError("marginalize: odd length");
  const Index S = lifted.size() / 2;
  return lifted.head(S) + lifted.tail(S);
}

TransitionKernel mixture(const TransitionKernel& a, const TransitionKernel& b, double weight_a) {
  if (a.size() != b.size() || a.space() != b.space())
    throw ParameterError("mixture: kernels live on different spaces");
  if (!(weight_a >= 0.0 && weight_a <= 1.0)) throw ParameterError("mixture: weight must lie in [0, 1]");
  return TransitionKernel(weight_a * a.matrix() + (1.0 - weight_a) * b.matrix(), a.space(),
                          "mixture(" + a.label() + "," + b.label() + ")", {{"weight", weight_a}});
}

}  // namespace nrmc
