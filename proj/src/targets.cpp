#include "nrmc/targets.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace nrmc {

namespace {

Index wrap(Index x, Index S) { return ((x % S) + S) % S; }

std::string num(double v) {
  std::string s = std::to_string(v);
  s.erase(s.find_last_not_of('0') + 1);
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

}  // namespace

Target rugged_circle(Index S, double rho) {
  if (S < 4 || S % 2 != 0) throw ParameterError("rugged_circle: S must be even and >= 4");
  if (!(rho > 0.0 && rho <= 1.0)) throw ParameterError("rugged_circle: rho must lie in (0, 1]");
  Vector w(S);
  // label x = i + 1 is odd for even i
  for (Index i = 0; i < S; ++i) w(i) = (i % 2 == 0) ? 1.0 : rho;
  w /= w.sum();
  return Target(std::move(w), "rugged_circle(S=" + std::to_string(S) + ",rho=" + num(rho) + ")",
                Topology::circle, S);
}

Target linear_circle(Index S) {
  if (S < 5 || S % 2 == 0) throw ParameterError("linear_circle: S must be odd and >= 5");
  Vector w(S);
  const double norm = static_cast<double>(S) * static_cast<double>(S + 1);
  for (Index i = 0; i < S; ++i) w(i) = 2.0 * static_cast<double>(i + 1) / norm;
  return Target(std::move(w), "linear_circle(S=" + std::to_string(S) + ")", Topology::circle, S);
}

Target uniform_circle(Index S) {
  if (S < 3) throw ParameterError("uniform_circle: S must be >= 3");
  return Target(Vector::Constant(S, 1.0 / static_cast<double>(S)),
                "uniform_circle(S=" + std::to_string(S) + ")", Topology::circle, S);
}

Target sigma_grid(Index S, double contrast) {
  if (S < 3) throw ParameterError("sigma_grid: S must be >= 3");
  if (!(contrast >= 1.0 && contrast < 1.5))
    throw ParameterError("sigma_grid: contrast must lie in [1, 1.5)");
  const double band = std::max(1.0, static_cast<double>(S) / 5.0);
  Vector w(S * S);
  for (Index r = 0; r < S; ++r) {
    const double wave =
        0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * static_cast<double>(r) /
                              static_cast<double>(S - 1)));
    for (Index c = 0; c < S; ++c) {
      const double d = static_cast<double>(std::min(c, S - 1 - c));
      const double edge = std::max(0.0, 1.0 - d / band);
      w(grid_index(r, c, S)) = 1.0 + (contrast - 1.0) * edge * wave;
    }
  }
  w /= w.sum();
  return Target(std::move(w),
                "sigma_grid(S=" + std::to_string(S) + ",contrast=" + num(contrast) + ")",
                Topology::grid, S);
}

ProposalKernel neighbor_proposal_circle(Index S) {
  if (S < 3) throw ParameterError("neighbor_proposal_circle: S must be >= 3");
  Matrix q = Matrix::Zero(S, S);
  for (Index x = 0; x < S; ++x) {
    q(x, wrap(x + 1, S)) += 0.5;
    q(x, wrap(x - 1, S)) += 0.5;
  }
  return ProposalKernel(std::move(q), "neighbor_circle(S=" + std::to_string(S) + ")");
}

ProposalKernel lazy_proposal_circle(Index S, double eps) {
  if (S < 3) throw ParameterError("lazy_proposal_circle: S must be >= 3");
  if (!(eps > 0.0 && eps < 1.0)) throw ParameterError("lazy_proposal_circle: eps must lie in (0, 1)");
  Matrix q = Matrix::Zero(S, S);
  const double side = 0.5 * (1.0 - eps);
  for (Index x = 0; x < S; ++x) {
    q(x, x) = eps;
    q(x, wrap(x + 1, S)) += side;
    q(x, wrap(x - 1, S)) += side;
  }
  return ProposalKernel(std::move(q),
                        "lazy_circle(S=" + std::to_string(S) + ",eps=" + num(eps) + ")");
}

ProposalKernel grid_proposal(Index S) {
  if (S < 2) throw ParameterError("grid_proposal: S must be >= 2");
  const Index n = S * S;
  Matrix q = Matrix::Zero(n, n);
  for (Index r = 0; r < S; ++r) {
    for (Index c = 0; c < S; ++c) {
      Index nbrs[4];
      int k = 0;
      if (r > 0) nbrs[k++] = grid_index(r - 1, c, S);
      if (r + 1 < S) nbrs[k++] = grid_index(r + 1, c, S);
      if (c > 0) nbrs[k++] = grid_index(r, c - 1, S);
      if (c + 1 < S) nbrs[k++] = grid_index(r, c + 1, S);
      for (int j = 0; j < k; ++j) q(grid_index(r, c, S), nbrs[j]) = 1.0 / k;
    }
  }
  return ProposalKernel(std::move(q), "grid(S=" + std::to_string(S) + ")");
}

TestFunction test_function(const Target& target, FunctionKind kind, int param) {
  const Index n = target.size();
  TestFunction f;
  f.kind = kind;
  f.param = param;
  f.values.resize(n);
  switch (kind) {
    case FunctionKind::identity:
      for (Index i = 0; i < n; ++i) f.values(i) = static_cast<double>(i + 1);
      f.label = "identity";
      break;
    case FunctionKind::indicator:
      if (param < 1 || param > n) throw ParameterError("test_function: indicator index out of range");
      f.values.setZero();
      f.values(param - 1) = 1.0;
      f.label = "indicator(" + std::to_string(param) + ")";
      break;
    case FunctionKind::polynomial:
      if (param < 0) throw ParameterError("test_function: polynomial degree must be >= 0");
      for (Index i = 0; i < n; ++i) f.values(i) = std::pow(static_cast<double>(i + 1), param);
      f.label = "polynomial(" + std::to_string(param) + ")";
      break;
    case FunctionKind::inverse_polynomial:
      if (param < 0) throw ParameterError("test_function: polynomial degree must be >= 0");
      for (Index i = 0; i < n; ++i) f.values(i) = std::pow(static_cast<double>(i + 1), -param);
      f.label = "inverse_polynomial(" + std::to_string(param) + ")";
      break;
    case FunctionKind::custom:
      throw ParameterError("test_function: use custom_function for explicit values");
  }
  return f;
}

TestFunction custom_function(Vector values, std::string label) {
  TestFunction f;
  f.values = std::move(values);
  f.kind = FunctionKind::custom;
  f.label = std::move(label);
  return f;
}

}  // namespace nrmc
