#include "nrmc/vorticity.hpp"

#include "nrmc/kernels.hpp"

#include <cmath>
#include <limits>

namespace nrmc {

VorticityField circle_vorticity(Index S, double zeta) {
  if (S < 3) throw ParameterError("circle_vorticity: S must be >= 3");
  Matrix g = Matrix::Zero(S, S);
  for (Index x = 0; x < S; ++x) {
    g(x, (x + 1) % S) = zeta;
    g(x, (x + S - 1) % S) = -zeta;
  }
  return {std::move(g), zeta};
}

VorticityField grid_vorticity(Index S, double zeta) {
  if (S < 2) throw ParameterError("grid_vorticity: S must be >= 2");
  const Index n = S * S;
  Matrix g = Matrix::Zero(n, n);
  const Index blocks = S / 2;
  for (Index b = 0; b < blocks; ++b) {
    const Index top = 2 * b * S;  // first cell of the upper row
    const Index bottom = top + S;
    // upper row: tridiagonal B_D, lower row: -B_D
    for (Index i = 0; i + 1 < S; ++i) {
      g(top + i, top + i + 1) = -zeta;
      g(top + i + 1, top + i) = zeta;
      g(bottom + i, bottom + i + 1) = zeta;
      g(bottom + i + 1, bottom + i) = -zeta;
    }
    // couplings B_OD = diag(zeta, 0, ..., 0, -zeta) and -B_OD
    g(top, bottom) = zeta;
    g(bottom, top) = -zeta;
    g(top + S - 1, bottom + S - 1) = -zeta;
    g(bottom + S - 1, top + S - 1) = zeta;
  }
  return {std::move(g), zeta};
}

double zeta_max(const Target& pi, const ProposalKernel& Q, const VorticityField& unit) {
  const Index n = pi.size();
  if (Q.size() != n || unit.size() != n) throw ParameterError("zeta_max: dimension mismatch");
  double best = std::numeric_limits<double>::infinity();
  for (Index x = 0; x < n; ++x)
    for (Index y = 0; y < n; ++y)
      if (unit(x, y) < 0.0) best = std::min(best, pi(y) * Q(y, x) / -unit(x, y));
  if (!std::isfinite(best))
    throw DegenerateInputError("zeta_max: unit field has no negative entry");
  return best;
}

ValidationReport validate(const VorticityField& gamma, const Target& pi, const ProposalKernel& Q) {
  const Index n = pi.size();
  if (Q.size() != n || gamma.size() != n || gamma.matrix.cols() != n)
    throw ParameterError("validate: dimension mismatch");
  const Matrix& g = gamma.matrix;
  ValidationReport rep;
  const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
  rep.zero_field = g.cwiseAbs().maxCoeff() == 0.0;

  auto record = [](CheckResult& c, Index x, Index y, double mag, double tol) {
    if (mag > c.magnitude) {
      c.magnitude = mag;
      if (mag > tol) {
        c.passed = false;
        c.row = x;
        c.col = y;
      }
    }
  };

  for (Index x = 0; x < n; ++x) {
    for (Index y = 0; y < n; ++y) {
      record(rep.skew_symmetry, x, y, std::abs(g(x, y) + g(y, x)), 1e-14 * scale);
      if ((Q(x, y) == 0.0) != (Q(y, x) == 0.0))
        record(rep.symmetric_structure, x, y, std::max(Q(x, y), Q(y, x)), 0.0);
      const double bound = pi(y) * Q(y, x);
      const double deficit = -bound - g(x, y);
      if (deficit > 0.0) {
        // relative slack so that the closed-form zeta_max passes
        const double tol = 1e-12 * bound;
        if (deficit > tol && deficit > rep.lower_bound.magnitude) {
          rep.lower_bound.passed = false;
          rep.lower_bound.row = x;
          rep.lower_bound.col = y;
        }
        rep.lower_bound.magnitude = std::max(rep.lower_bound.magnitude, deficit);
      }
    }
    record(rep.zero_row_sums, x, x, std::abs(g.row(x).sum()), 1e-12);
  }
  return rep;
}

void require_valid(const ValidationReport& r) {
  if (!r.skew_symmetry.passed)
    throw AssumptionViolation("skew-symmetry Gamma(x,y) = -Gamma(y,x)", r.skew_symmetry.row,
                              r.skew_symmetry.col, r.skew_symmetry.magnitude);
  if (!r.zero_row_sums.passed)
    throw AssumptionViolation("non-explosion (zero row sums of Gamma)", r.zero_row_sums.row,
                              r.zero_row_sums.col, r.zero_row_sums.magnitude);
  if (!r.symmetric_structure.passed)
    throw AssumptionViolation("symmetric structure Q(x,y) = 0 => Q(y,x) = 0",
                              r.symmetric_structure.row, r.symmetric_structure.col,
                              r.symmetric_structure.magnitude);
  if (!r.lower_bound.passed)
    throw AssumptionViolation("lower bound Gamma(x,y) >= -pi(y) Q(y,x)", r.lower_bound.row,
                              r.lower_bound.col, r.lower_bound.magnitude);
}

VorticityField extract_vorticity(const TransitionKernel& P, const Target& pi) {
  const Target t = target_for(P, pi);
  const Matrix flux = t.probs().asDiagonal() * P.matrix();
  return {flux - flux.transpose(), std::numeric_limits<double>::quiet_NaN()};
}

}  // namespace nrmc
