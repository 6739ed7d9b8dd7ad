#pragma once

#include "nrmc/types.hpp"
#include "nrmc/vorticity.hpp"

namespace nrmc {

inline constexpr double kReversibilityTol = 1e-10;

/// pi~(x, zeta) = pi(x) / 2 on the lifted space.
Target lift_target(const Target& base);

/// Lifts f to f~(x, zeta) = f(x).
TestFunction lift_function(const TestFunction& f);

/// Returns `pi` itself for marginal kernels and its lift for lifted ones.
/// A target that already has the kernel's dimension is returned unchanged.
Target target_for(const TransitionKernel& P, const Target& pi);
TestFunction function_for(const TransitionKernel& P, const TestFunction& f);

/// Acceptance probabilities A(x, y) = 1 ^ R(x, y) with
/// R = (Gamma(x,y) + pi(y)Q(y,x)) / (pi(x)Q(x,y)), and R = 1 where the
/// denominator vanishes. Gamma = 0 gives the Metropolis-Hastings acceptance.
Matrix acceptance_matrix(const Target& pi, const ProposalKernel& Q, const Matrix& gamma);

TransitionKernel mh(const Target& pi, const ProposalKernel& Q);

/// Guided walk on a circle with unit steps. From (x, xi) it proposes x + xi,
/// keeps xi on acceptance and flips it on rejection.
TransitionKernel guided_walk(const Target& pi, Index S);

/// Keeps x and redraws the momentum uniformly.
TransitionKernel flip_kernel(Index S);

/// P_GW (alpha P_flip + (1 - alpha) I).
TransitionKernel gw_alpha(const TransitionKernel& gw, double alpha);

/// Non-reversible Metropolis-Hastings. Validates Gamma against (pi, Q) first.
TransitionKernel nrmh(const Target& pi, const ProposalKernel& Q, const VorticityField& gamma);

/// Lifted NRMH: moves with vorticity zeta * Gamma, on rejection keeps the
/// momentum with probability 1 - varrho and flips it with probability varrho.
/// Requires a pi-reversible Q.
TransitionKernel nrmhav(const Target& pi, const ProposalKernel& Q, const VorticityField& gamma,
                        double varrho);

/// Generic lifted chain from two sub-stochastic kernels and switching rates.
/// From (x, zeta): switch momentum with probability rate_zeta(x), move with
/// T_zeta(x, .), stay otherwise. Checks skew-detailed balance
/// pi(x) T_plus(x,y) = pi(y) T_minus(y,x) and the admissibility conditions on
/// the rates.
TransitionKernel generic_lifted(const Matrix& t_plus, const Matrix& t_minus,
                                const Vector& rate_plus, const Vector& rate_minus,
                                const Target& pi, std::string label = "generic_lifted");

/// Guided-walk sub-kernels with the minimal admissible switching rate
/// rate_zeta(x) = max(0, T_{-zeta}(x, S) - T_zeta(x, S)).
TransitionKernel lifted_gw(const Target& pi, Index S);

/// Accepted-move sub-kernels of the unit-step guided walk, in (plus, minus).
std::pair<Matrix, Matrix> gw_subkernels(const Target& pi, Index S);

/// P*(x, y) = pi(y) P(y, x) / pi(x).
TransitionKernel adjoint(const TransitionKernel& P, const Target& pi);

/// P P*.
TransitionKernel mult_reversibilization(const TransitionKernel& P, const Target& pi);

bool is_reversible(const TransitionKernel& P, const Target& pi, double tol = kReversibilityTol);

/// Largest |pi(x) P(x,y) - pi(y) P(y,x)|.
double reversibility_defect(const Matrix& P, const Vector& pi);

/// ||pi P - pi||_inf.
double stationarity_defect(const TransitionKernel& P, const Target& pi);

/// Sums the two momentum halves of a lifted distribution.
Vector marginalize(const Vector& lifted);

/// weight_a P_a + (1 - weight_a) P_b, both on the same space.
TransitionKernel mixture(const TransitionKernel& a, const TransitionKernel& b, double weight_a = 0.5);

}  // namespace nrmc
