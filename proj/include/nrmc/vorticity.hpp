#pragma once

#include "nrmc/types.hpp"

namespace nrmc {

class TransitionKernel;

/// Skew-symmetric matrix with zero row sums, added to the numerator of the
/// Metropolis-Hastings ratio. `zeta` records the intensity the field was built
/// with (NaN when the field did not come from a one-parameter family).
struct VorticityField {
  Matrix matrix;
  double zeta = 0.0;

  Index size() const { return matrix.rows(); }
  double operator()(Index x, Index y) const { return matrix(x, y); }
  VorticityField scaled(double factor) const { return {matrix * factor, zeta * factor}; }
  VorticityField negated() const { return scaled(-1.0); }
};

// Gamma(x, x+1) = zeta, Gamma(x, x-1) = -zeta on the circle (with wraparound).
VorticityField circle_vorticity(Index S, double zeta);

/// Block-diagonal field on the row-major S x S grid. Each block couples two
/// consecutive grid rows into one closed loop: left to right along the first
/// row, down, right to left along the second row, up. For odd S the last row
/// is left without circulation.
VorticityField grid_vorticity(Index S, double zeta);

/// Largest zeta >= 0 such that zeta * unit(x, y) >= -pi(y) Q(y, x) everywhere.
/// Throws DegenerateInputError when `unit` has no negative entry.
double zeta_max(const Target& pi, const ProposalKernel& Q, const VorticityField& unit);

struct CheckResult {
  bool passed = true;
  Index row = -1;  // worst entry, 0-based; -1 when nothing is violated
  Index col = -1;
  double magnitude = 0.0;
};

struct ValidationReport {
  CheckResult skew_symmetry;
  CheckResult zero_row_sums;
  CheckResult symmetric_structure;
  CheckResult lower_bound;
  // Set when Gamma is identically zero. Not a failure: the zero field is the
  // reversible limit of every family.
  bool zero_field = false;

  bool all_passed() const {
    return skew_symmetry.passed && zero_row_sums.passed && symmetric_structure.passed &&
           lower_bound.passed;
  }
};

ValidationReport validate(const VorticityField& gamma, const Target& pi, const ProposalKernel& Q);

// Throws AssumptionViolation for the first failed check of `report`.
void require_valid(const ValidationReport& report);

/// pi(x) P(x, y) - pi(y) P(y, x). Zero exactly when P is pi-reversible.
VorticityField extract_vorticity(const TransitionKernel& P, const Target& pi);

}  // namespace nrmc
