#include "nrmc/types.hpp"

#include <cmath>
#include <sstream>

namespace nrmc {

namespace {

std::string violation_message(const std::string& assumption, Index row, Index col,
                              double residual) {
  std::ostringstream os;
  os << "assumption violated: " << assumption << " at (" << row + 1 << ", " << col + 1
     << "), residual " << residual;
  return os.str();
}

}  // namespace

AssumptionViolation::AssumptionViolation(std::string assumption, Index row, Index col,
                                         double residual)
    : Error(violation_message(assumption, row, col, residual)),
      assumption_(std::move(assumption)),
      row_(row),
      col_(col),
      residual_(residual) {}

const char* to_string(Topology t) {
  switch (t) {
    case Topology::circle: return "circle";
    case Topology::grid: return "grid";
    case Topology::lifted: return "lifted";
    case Topology::general: return "general";
  }
  return "general";
}

const char* to_string(FunctionKind k) {
  switch (k) {
    case FunctionKind::identity: return "identity";
    case FunctionKind::indicator: return "indicator";
    case FunctionKind::polynomial: return "polynomial";
    case FunctionKind::inverse_polynomial: return "inverse_polynomial";
    case FunctionKind::custom: return "custom";
  }
  return "custom";
}

double row_sum_defect(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return (m.rowwise().sum().array() - 1.0).abs().maxCoeff();
}

Target::Target(Vector probs, std::string label, Topology topology, Index side)
    : probs_(std::move(probs)), label_(std::move(label)), topology_(topology), side_(side) {
  if (probs_.size() < 2) throw ParameterError("target needs at least two states");
  if (!probs_.allFinite()) throw ParameterError("target has non-finite entries");
  if (probs_.minCoeff() < 0.0) throw ParameterError("target has negative entries");
  if (std::abs(probs_.sum() - 1.0) > kStochasticTol)
    throw ParameterError("target does not sum to one");
  if (side_ == 0) side_ = probs_.size();
}

ProposalKernel::ProposalKernel(Matrix matrix, std::string label)
    : matrix_(std::move(matrix)), label_(std::move(label)) {
  if (matrix_.rows() != matrix_.cols()) throw ParameterError("proposal must be square");
  if (!matrix_.allFinite()) throw ParameterError("proposal has non-finite entries");
  if (matrix_.size() > 0 && matrix_.minCoeff() < 0.0)
    throw ParameterError("proposal has negative entries");
  if (row_sum_defect(matrix_) > kStochasticTol)
    throw ParameterError("proposal rows do not sum to one");
}

bool ProposalKernel::has_symmetric_structure() const {
  const Index n = matrix_.rows();
  for (Index x = 0; x < n; ++x)
    for (Index y = x + 1; y < n; ++y)
      if ((matrix_(x, y) == 0.0) != (matrix_(y, x) == 0.0)) return false;
  return true;
}

TransitionKernel::TransitionKernel(Matrix matrix, Space space, std::string label,
                                   std::map<std::string, double> params)
    : matrix_(std::move(matrix)), space_(space), label_(std::move(label)),
      params_(std::move(params)) {
  if (matrix_.rows() != matrix_.cols()) throw ParameterError("kernel must be square");
  if (space_ == Space::lifted && matrix_.rows() % 2 != 0)
    throw ParameterError("lifted kernel must have even dimension");
  if (!matrix_.allFinite()) throw ParameterError("kernel has non-finite entries");
  if (matrix_.size() > 0 && (matrix_.minCoeff() < 0.0 || matrix_.maxCoeff() > 1.0 + kStochasticTol))
    throw ParameterError("kernel entries outside [0, 1]");
  if (row_sum_defect(matrix_) > kStochasticTol)
    throw ParameterError("kernel rows do not sum to one");
}

}  // namespace nrmc
