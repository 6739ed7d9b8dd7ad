#pragma once

#include "nrmc/types.hpp"

#include <Eigen/Sparse>

#include <complex>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

namespace nrmc {

//------------------------------------------------------------------------------
// Distances
//------------------------------------------------------------------------------

/// Total variation distance (1/2) sum |mu - nu|.
template <typename DerivedA, typename DerivedB>
double tv_distance(const Eigen::MatrixBase<DerivedA>& mu, const Eigen::MatrixBase<DerivedB>& nu) {
  if (mu.size() != nu.size()) throw ParameterError("tv_distance: length mismatch");
  return 0.5 * (mu - nu).cwiseAbs().sum();
}

/// Plain Euclidean distance between probability vectors (not the pi-weighted
/// chi-square norm).
template <typename DerivedA, typename DerivedB>
double l2_distance(const Eigen::MatrixBase<DerivedA>& mu, const Eigen::MatrixBase<DerivedB>& nu) {
  if (mu.size() != nu.size()) throw ParameterError("l2_distance: length mismatch");
  return (mu - nu).norm();
}

//------------------------------------------------------------------------------
// Law propagation
//------------------------------------------------------------------------------

/// Applies mu <- mu P (and f <- P f) using a sparse copy of P when P is
/// sparse enough. Kernels of the nearest-neighbour examples have a handful of
/// nonzeros per row, so this is where long horizons spend their time.
class Propagator {
 public:
  explicit Propagator(const Matrix& P);

  void step(Vector& mu) const;        // mu <- mu P   (row-vector convention)
  void apply(Vector& f) const;        // f  <- P f
  Index size() const { return n_; }
  bool sparse() const { return use_sparse_; }

 private:
  Index n_;
  bool use_sparse_;
  Matrix dense_t_;
  Matrix dense_;
  Eigen::SparseMatrix<double, Eigen::RowMajor> sparse_t_;
  Eigen::SparseMatrix<double, Eigen::RowMajor> sparse_;
  mutable Vector scratch_;
};

//------------------------------------------------------------------------------
// Convergence
//------------------------------------------------------------------------------

struct ConvergenceReport {
  std::vector<std::int64_t> times;
  std::vector<double> tv;  // marginal law vs pi
  std::vector<double> l2;
  bool marginalized = false;
  // Lifted chains only: joint law vs pi~.
  std::vector<double> lifted_tv;
  std::vector<double> lifted_l2;
};

/// Iterates mu_{t+1} = mu_t P for t = 0..horizon and records distances to
/// the target. `pi` is the marginal target; for lifted kernels both the
/// marginalized law and the joint law are reported.
ConvergenceReport convergence_curve(const TransitionKernel& P, const Target& pi, const Vector& mu0,
                                    std::int64_t horizon);

struct MixingTime {
  std::int64_t steps = 0;
  bool reached = false;
  std::int64_t cap = 0;
};

inline constexpr double kDefaultMixingEps = 1e-5;
inline constexpr std::int64_t kDefaultMixingCap = 1'000'000;

// Which law of a lifted chain is compared with the target: the x-marginal
// against pi, or the joint law against pi~. Marginal chains ignore it.
enum class Law { marginal, joint };

/// First t with TV(mu0 P^t, pi) <= eps, on the law selected by `law`.
MixingTime mixing_time(const TransitionKernel& P, const Target& pi, const Vector& mu0,
                       double eps = kDefaultMixingEps, std::int64_t cap = kDefaultMixingCap,
                       Law law = Law::marginal);

/// Point mass at 0-based state `x` (with momentum +1 for lifted kernels).
Vector dirac(const TransitionKernel& P, Index x, int zeta = 1);

//------------------------------------------------------------------------------
// Variance
//------------------------------------------------------------------------------

struct VarianceReport {
  double value = 0.0;
  std::string function;
  std::string kernel;
  // Reciprocal condition estimate of I - P + Pi; least-squares was used
  // when this fell below the LU threshold (reducible chains).
  double rcond = 0.0;
  bool least_squares = false;
};

/// v(f, P) = 2 <[(I - P + Pi)^-1 - Pi](f - pi f), f - pi f>_pi - ||f - pi f||^2_pi,
/// evaluated through a linear solve. Lifted kernels use f~ and pi~.
VarianceReport asymptotic_variance(const TransitionKernel& P, const Target& pi,
                                   const TestFunction& f);

/// Stationary variance of f under pi.
double variance_under(const Target& pi, const Vector& f);

/// corr(f(X_0), f(X_t)) at stationarity.
double autocorrelation(const TransitionKernel& P, const Target& pi, const TestFunction& f,
                       std::int64_t t);

enum class MomentKind { product, squared_increment };

/// E[X_t X_{t+lag}] or E[(X_{t+lag} - X_t)^2] at stationarity, with X the
/// 1-based marginal label. lag must be 1 or 2.
double lag_moment(const TransitionKernel& P, const Target& pi, int lag, MomentKind kind);

struct VLambda {
  double value = 0.0;
  std::int64_t terms = 0;
  double truncation_bound = 0.0;  // bound on the neglected tail
};

/// ||f||^2_pi + 2 sum_{k=1}^{K} lambda^k <f, P^k f>_pi with f centered. With
/// terms <= 0, K is chosen so the tail bound
/// 2 lambda^{K+1} / (1 - lambda) ||f||_pi ||f||_inf falls below 1e-12 max(1, ||f||^2_pi).
VLambda v_lambda(const TransitionKernel& P, const Target& pi, const TestFunction& f, double lambda,
                 std::int64_t terms = 0);

//------------------------------------------------------------------------------
// Spectra and geometry
//------------------------------------------------------------------------------

struct SpectralReport {
  Eigen::VectorXcd eigenvalues;  // by decreasing modulus
  double slem = 0.0;
  double spectral_gap = 0.0;
  double reversibilization_top = 0.0;
};

SpectralReport spectrum(const TransitionKernel& P, const Target& pi);

/// Largest eigenvalue of P P* restricted to pi-mean-zero functions.
double reversibilization_top(const TransitionKernel& P, const Target& pi);

/// Eigenvalues of a pi-reversible kernel via its symmetrization, ascending.
Vector reversible_eigenvalues(const TransitionKernel& P, const Target& pi);

enum class ConductanceMode { exhaustive, arcs };

inline constexpr Index kExhaustiveConductanceLimit = 22;

/// min over A with pi(A) < 1/2 of sum_{x in A} pi(x) P(x, A^c) / pi(A).
double conductance(const TransitionKernel& P, const Target& pi, ConductanceMode mode);

/// (1 - 2h, 1 - h^2).
std::pair<double, double> cheeger_bounds(double h);

using StatePath = std::vector<Index>;  // closed: front() == back()

struct PathBound {
  double iota = 0.0;
  double eig_lower = 0.0;
  std::vector<double> lengths;  // |sigma_x| per path
};

/// Geometric lower bound on the smallest eigenvalue from one odd closed path
/// per state. A path visiting an edge twice counts it once.
PathBound odd_path_bound(const TransitionKernel& P, const Target& pi,
                         const std::vector<StatePath>& paths);

/// Self-loops for states 2..S and the full circuit 1 -> 2 -> ... -> S -> 1 for
/// state 1 (0-based indices in the returned paths).
std::vector<StatePath> circle_canonical_paths(Index S);

//------------------------------------------------------------------------------
// Refresh-rate search
//------------------------------------------------------------------------------

struct AlphaSearch {
  std::optional<double> alpha;
  std::int64_t tau = 0;
  std::int64_t evaluations = 0;
};

/// Smallest alpha on a two-stage grid over (0, 1] (coarse step 0.05, then
/// 0.001 inside the first qualifying cell) whose mixing time is at most
/// reference_tau.
AlphaSearch alpha_star_search(const std::function<TransitionKernel(double)>& builder,
                              const Target& pi, const Vector& mu0, std::int64_t reference_tau,
                              double eps = kDefaultMixingEps,
                              std::int64_t cap = kDefaultMixingCap, Law law = Law::marginal);

}  // namespace nrmc
