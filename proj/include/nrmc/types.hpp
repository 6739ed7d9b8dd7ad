#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>

namespace nrmc {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr const char* kVersion = "0.3.0";

// Tolerance used for row sums and probability normalization throughout.
inline constexpr double kStochasticTol = 1e-12;

//------------------------------------------------------------------------------
// Errors
//------------------------------------------------------------------------------

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A precondition on the arguments was violated (bad size, out of range value).
class ParameterError : public Error {
 public:
  using Error::Error;
};

// The input is well formed but degenerate for the requested quantity.
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

// A modelling assumption on (pi, Q, Gamma) or on lifted sub-kernels failed.
// Carries the offending entry (0-based) and its residual.
class AssumptionViolation : public Error {
 public:
  AssumptionViolation(std::string assumption, Index row, Index col, double residual);

  const std::string& assumption() const { return assumption_; }
  Index row() const { return row_; }
  Index col() const { return col_; }
  double residual() const { return residual_; }

 private:
  std::string assumption_;
  Index row_;
  Index col_;
  double residual_;
};

class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, double condition_estimate)
      : Error(what), condition_estimate_(condition_estimate) {}
  double condition_estimate() const { return condition_estimate_; }

 private:
  double condition_estimate_;
};

// The requested computation exceeds a built-in resource guard.
class ResourceError : public Error {
 public:
  using Error::Error;
};

//------------------------------------------------------------------------------
// Domain types
//------------------------------------------------------------------------------

// How the states of a target are laid out. Circle states are labelled 1..S
// counterclockwise, grid states linearize (row, col) in row-major order, lifted
// states follow the lifted index map below.
enum class Topology { circle, grid, lifted, general };

const char* to_string(Topology t);

/// A normalized probability vector over a finite state space.
class Target {
 public:
  Target(Vector probs, std::string label, Topology topology = Topology::general,
         Index side = 0);

  const Vector& probs() const { return probs_; }
  Index size() const { return probs_.size(); }
  double operator()(Index i) const { return probs_(i); }
  const std::string& label() const { return label_; }
  Topology topology() const { return topology_; }
  // Grid side length for grid targets, circle length for circles.
  Index side() const { return side_; }

 private:
  Vector probs_;
  std::string label_;
  Topology topology_;
  Index side_;
};

/// A row-stochastic proposal matrix Q.
class ProposalKernel {
 public:
  ProposalKernel(Matrix matrix, std::string label);

  const Matrix& matrix() const { return matrix_; }
  Index size() const { return matrix_.rows(); }
  double operator()(Index x, Index y) const { return matrix_(x, y); }
  const std::string& label() const { return label_; }

  // Q(x,y) = 0 implies Q(y,x) = 0.
  bool has_symmetric_structure() const;

 private:
  Matrix matrix_;
  std::string label_;
};

enum class FunctionKind { identity, indicator, polynomial, inverse_polynomial, custom };

const char* to_string(FunctionKind k);

struct TestFunction {
  Vector values;
  FunctionKind kind = FunctionKind::custom;
  int param = 0;
  std::string label;
};

enum class Space { marginal, lifted };

// Lifted states (x, zeta) with x in 0..S-1 map to x for zeta = +1 and to S + x
// for zeta = -1. In 1-based labels this is the usual {1,...,2S} numbering with
// the +1 block first.
inline Index lifted_index(Index x, int zeta, Index base_size) {
  return zeta > 0 ? x : base_size + x;
}
inline Index base_state(Index lifted, Index base_size) {
  return lifted < base_size ? lifted : lifted - base_size;
}
inline int momentum_of(Index lifted, Index base_size) { return lifted < base_size ? 1 : -1; }

/// A row-stochastic transition matrix on the marginal or lifted space.
class TransitionKernel {
 public:
  TransitionKernel(Matrix matrix, Space space, std::string label,
                   std::map<std::string, double> params = {});

  const Matrix& matrix() const { return matrix_; }
  Index size() const { return matrix_.rows(); }
  // Number of marginal states (size() / 2 for lifted kernels).
  Index base_size() const { return space_ == Space::lifted ? matrix_.rows() / 2 : matrix_.rows(); }
  Space space() const { return space_; }
  bool lifted() const { return space_ == Space::lifted; }
  double operator()(Index x, Index y) const { return matrix_(x, y); }
  const std::string& label() const { return label_; }
  const std::map<std::string, double>& params() const { return params_; }

 private:
  Matrix matrix_;
  Space space_;
  std::string label_;
  std::map<std::string, double> params_;
};

/// Maximum absolute row-sum defect |sum_y P(x,y) - 1|.
double row_sum_defect(const Matrix& m);

}  // namespace nrmc
