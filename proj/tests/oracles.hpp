#pragma once

// Independent reference computations for the unit tests. Everything here is
// written with plain loops and dense linear algebra so that it shares no code
// path with the library beyond the Eigen types.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace oracle {

using Eigen::MatrixXd;
using Eigen::VectorXd;

inline MatrixXd metropolis(const VectorXd& pi, const MatrixXd& Q, const MatrixXd& G) {
  const auto n = pi.size();
  MatrixXd P = MatrixXd::Zero(n, n);
  for (int x = 0; x < n; ++x) {
    double off = 0;
    for (int y = 0; y < n; ++y) {
      if (y == x || Q(x, y) == 0) continue;
      double a = (G(x, y) + pi(y) * Q(y, x)) / (pi(x) * Q(x, y));
      a = std::min(1.0, std::max(0.0, a));
      P(x, y) = Q(x, y) * a;
      off += P(x, y);
    }
    P(x, x) = 1 - off;
  }
  return P;
}

// Fundamental matrix route: Z = inverse of (I - P + 1 pi^T).
inline double variance_fundamental(const MatrixXd& P, const VectorXd& pi, const VectorXd& f) {
  const auto n = pi.size();
  MatrixXd A = MatrixXd::Identity(n, n) - P + VectorXd::Ones(n) * pi.transpose();
  MatrixXd Z = A.fullPivLu().inverse();
  VectorXd g = f.array() - pi.dot(f);
  VectorXd Zg = Z * g;
  return 2 * pi.dot(g.cwiseProduct(Zg)) - pi.dot(g.cwiseProduct(g));
}

// Autocovariance series, summed until the terms die out.
inline double variance_series(const MatrixXd& P, const VectorXd& pi, const VectorXd& f,
                              int max_terms = 2'000'000) {
  VectorXd g = f.array() - pi.dot(f);
  double v = pi.dot(g.cwiseProduct(g));
  VectorXd h = g;
  for (int k = 1; k < max_terms; ++k) {
    h = P * h;
    const double c = pi.dot(g.cwiseProduct(h));
    v += 2 * c;
    if (std::abs(c) < 1e-16 && h.cwiseAbs().maxCoeff() < 1e-14) break;
  }
  return v;
}

inline double conductance_bruteforce(const MatrixXd& P, const VectorXd& pi) {
  const int n = static_cast<int>(pi.size());
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 1; mask < (1u << n); ++mask) {
    double mass = 0, flow = 0;
    for (int x = 0; x < n; ++x)
      if (mask >> x & 1) mass += pi(x);
    if (mass >= 0.5 - 1e-13) continue;
    for (int x = 0; x < n; ++x) {
      if (!(mask >> x & 1)) continue;
      for (int y = 0; y < n; ++y)
        if (!(mask >> y & 1)) flow += pi(x) * P(x, y);
    }
    best = std::min(best, flow / mass);
  }
  return best;
}

// TV of the unit-step guided walk on the linear circle from state 1 with
// momentum +1, during its deterministic sweep (t < S).
inline double gw_sweep_tv(int S, int t) { return 1.0 - 2.0 * (1 + t) / (S * (S + 1.0)); }

inline VectorXd linear_pi(int S) {
  VectorXd p(S);
  for (int k = 0; k < S; ++k) p(k) = k + 1;
  return p / p.sum();
}

inline VectorXd rugged_pi(int S, double rho) {
  VectorXd p(S);
  for (int k = 0; k < S; ++k) p(k) = (k % 2 == 0) ? 1.0 : rho;
  return p / p.sum();
}

inline MatrixXd neighbour_circle(int S, double lazy = 0) {
  MatrixXd Q = MatrixXd::Zero(S, S);
  for (int x = 0; x < S; ++x) {
    Q(x, (x + 1) % S) += (1 - lazy) / 2;
    Q(x, (x + S - 1) % S) += (1 - lazy) / 2;
    Q(x, x) += lazy;
  }
  return Q;
}

}  // namespace oracle
