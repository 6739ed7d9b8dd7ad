#include "nrmc/analysis.hpp"
#include "nrmc/kernels.hpp"
#include "nrmc/targets.hpp"

#include "../oracles.hpp"

#include <doctest.h>

#include <algorithm>

using namespace nrmc;

namespace {

double max_abs(const Matrix& m) { return m.cwiseAbs().maxCoeff(); }

std::vector<double> sorted_real_spectrum(const Matrix& m) {
  Eigen::EigenSolver<Matrix> es(m, false);
  std::vector<double> v;
  for (Index i = 0; i < m.rows(); ++i) v.push_back(es.eigenvalues()(i).real());
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST_CASE("mh matches a loop-built metropolis kernel") {
  const Target pi = rugged_circle(10, 0.1);
  const auto Q = neighbor_proposal_circle(10);
  const auto P = mh(pi, Q);
  CHECK(P.label() == "mh");
  CHECK(!P.lifted());
  CHECK(max_abs(P.matrix() - oracle::metropolis(pi.probs(), Q.matrix(), Matrix::Zero(10, 10))) < 1e-15);
  CHECK(is_reversible(P, pi));
  CHECK(stationarity_defect(P, pi) < 1e-15);
}

TEST_CASE("mh spectrum on the four-state rugged circle") {
  for (double rho : {0.1, 0.5, 0.9}) {
    const Target pi = rugged_circle(4, rho);
    const auto ev = sorted_real_spectrum(mh(pi, neighbor_proposal_circle(4)).matrix());
    std::vector<double> want{-rho, 0.0, 1.0 - rho, 1.0};
    std::sort(want.begin(), want.end());
    for (int i = 0; i < 4; ++i) CHECK(ev[i] == doctest::Approx(want[i]).epsilon(1e-12));
  }
}

TEST_CASE("nrmh matches the oracle and keeps pi") {
  const Target pi = linear_circle(9);
  const auto Q = lazy_proposal_circle(9, 0.1);
  const double zm = zeta_max(pi, Q, circle_vorticity(9, 1.0));
  for (double s : {-1.0, -0.3, 0.0, 0.5, 1.0}) {
    const auto g = circle_vorticity(9, s * zm);
    const auto P = nrmh(pi, Q, g);
    CHECK(max_abs(P.matrix() - oracle::metropolis(pi.probs(), Q.matrix(), g.matrix)) < 1e-15);
    CHECK(stationarity_defect(P, pi) < 1e-15);
    CHECK(P.params().at("zeta") == doctest::Approx(s * zm));
    // off-diagonal flux recovers Gamma
    Matrix flux = extract_vorticity(P, pi).matrix;
    CHECK(max_abs(flux - g.matrix) < 1e-15);
  }
  CHECK_THROWS_AS(nrmh(pi, Q, circle_vorticity(9, 1.5 * zm)), AssumptionViolation);
}

TEST_CASE("guided walk is a lifted pi-invariant kernel with a sweep transient") {
  const Index S = 9;
  const Target pi = linear_circle(S);
  const auto P = guided_walk(pi, S);
  CHECK(P.lifted());
  CHECK(P.size() == 2 * S);
  CHECK(P.base_size() == S);
  CHECK(row_sum_defect(P.matrix()) < 1e-15);
  CHECK(stationarity_defect(P, pi) < 1e-15);
  // momentum kept on acceptance: (1,+) -> (2,+) with probability 1
  CHECK(P(lifted_index(0, 1, S), lifted_index(1, 1, S)) == 1.0);
  // rejection flips: from (9,+) the proposal 1 is accepted w.p. 1/9
  CHECK(P(lifted_index(8, 1, S), lifted_index(0, 1, S)) == doctest::Approx(1.0 / 9));
  CHECK(P(lifted_index(8, 1, S), lifted_index(8, -1, S)) == doctest::Approx(8.0 / 9));

  Vector mu = dirac(P, 0);
  for (int t = 0; t < S; ++t) {
    CHECK(tv_distance(marginalize(mu), pi.probs()) == doctest::Approx(oracle::gw_sweep_tv(S, t)).epsilon(1e-13));
    mu = (mu.transpose() * P.matrix()).transpose();
  }
  CHECK_THROWS_AS(guided_walk(sigma_grid(4, 1.2), 4), ParameterError);
}

TEST_CASE("momentum refresh") {
  const Target pi = rugged_circle(10, 0.1);
  const auto gw = guided_walk(pi, 10);
  CHECK(max_abs(gw_alpha(gw, 0.0).matrix() - gw.matrix()) == 0.0);
  const auto f = flip_kernel(10);
  CHECK(max_abs(gw_alpha(gw, 1.0).matrix() - gw.matrix() * f.matrix()) < 1e-16);
  for (double a : {0.01, 0.1, 0.5}) {
    const auto k = gw_alpha(gw, a);
    CHECK(k.params().at("alpha") == a);
    CHECK(stationarity_defect(k, pi) < 1e-15);
  }
  CHECK_THROWS_AS(gw_alpha(gw, 1.5), ParameterError);
  CHECK_THROWS_AS(gw_alpha(mh(pi, neighbor_proposal_circle(10)), 0.1), ParameterError);
}

TEST_CASE("nrmhav keeps the lifted target and refuses non-reversible proposals") {
  const Index S = 20;
  const Target pi = uniform_circle(S);
  const auto Q = lazy_proposal_circle(S, 0.1);
  const double zm = zeta_max(pi, Q, circle_vorticity(S, 1.0));
  for (double r : {0.0, 0.05, 0.5, 1.0}) {
    const auto K = nrmhav(pi, Q, circle_vorticity(S, zm), r);
    CHECK(K.lifted());
    CHECK(row_sum_defect(K.matrix()) < 1e-14);
    CHECK(stationarity_defect(K, pi) < 1e-15);
    CHECK(K.params().at("varrho") == r);
  }
  // with varrho = 0 the momentum never changes
  const auto K0 = nrmhav(pi, Q, circle_vorticity(S, zm), 0.0);
  CHECK(K0.matrix().topRightCorner(S, S).cwiseAbs().maxCoeff() == 0.0);

  const Target lin = linear_circle(9);
  const auto Q9 = neighbor_proposal_circle(9);
  const double z9 = zeta_max(lin, Q9, circle_vorticity(9, 1.0));
  CHECK_THROWS_AS(nrmhav(lin, Q9, circle_vorticity(9, z9), 0.1), AssumptionViolation);
  // the reversible MH kernel is an admissible proposal for the same target
  const ProposalKernel Qmh(mh(lin, Q9).matrix(), "mh");
  const auto K = nrmhav(lin, Qmh, circle_vorticity(9, zeta_max(lin, Qmh, circle_vorticity(9, 1.0))), 0.2);
  CHECK(stationarity_defect(K, lin) < 1e-15);
  CHECK_THROWS_AS(nrmhav(pi, Q, circle_vorticity(S, zm), -0.1), ParameterError);
}

TEST_CASE("acceptance mass is balanced between opposite fields") {
  const Index S = 50;
  const Target pi = uniform_circle(S);
  const auto Q = lazy_proposal_circle(S, 0.1);
  const double zm = zeta_max(pi, Q, circle_vorticity(S, 1.0));
  const auto g = circle_vorticity(S, 0.7 * zm);
  const Matrix ap = acceptance_matrix(pi, Q, g.matrix);
  const Matrix am = acceptance_matrix(pi, Q, -g.matrix);
  const Vector d = Q.matrix().cwiseProduct(ap - am).rowwise().sum();
  CHECK(d.cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("generic lifted chain checks its ingredients") {
  const Index S = 9;
  const Target pi = linear_circle(S);
  auto [tp, tm] = gw_subkernels(pi, S);
  const Vector mp = tp.rowwise().sum(), mm = tm.rowwise().sum();
  const Vector rp = (Vector::Ones(S) - mp), rm = (Vector::Ones(S) - mm);
  // maximal rates: the guided walk itself
  const auto full = generic_lifted(tp, tm, rp, rm, pi);
  CHECK(max_abs(full.matrix() - guided_walk(pi, S).matrix()) < 1e-15);

  const auto minimal = lifted_gw(pi, S);
  CHECK(stationarity_defect(minimal, pi) < 1e-15);
  for (Index x = 0; x < S; ++x)
    CHECK(minimal(lifted_index(x, 1, S), lifted_index(x, -1, S)) ==
          doctest::Approx(std::max(0.0, mm(x) - mp(x))));

  CHECK_THROWS_AS(generic_lifted(tp, tp, rp, rm, pi), AssumptionViolation);
  Vector too_big = rp;
  too_big(3) += 0.5;
  CHECK_THROWS_AS(generic_lifted(tp, tm, too_big, rm, pi), AssumptionViolation);
  Vector unbalanced = rp * 0.5;
  CHECK_THROWS_AS(generic_lifted(tp, tm, unbalanced, rm, pi), AssumptionViolation);
  CHECK_THROWS_AS(generic_lifted(tp, tm, rp.head(3), rm, pi), ParameterError);
}

TEST_CASE("adjoint, reversibilization and mixtures") {
  const Target pi = linear_circle(9);
  const auto Q = neighbor_proposal_circle(9);
  const auto P = nrmh(pi, Q, circle_vorticity(9, 1.0 / 90));
  CHECK_FALSE(is_reversible(P, pi));
  CHECK(reversibility_defect(P.matrix(), pi.probs()) == doctest::Approx(1.0 / 90));
  const auto Ps = adjoint(P, pi);
  CHECK(max_abs(adjoint(Ps, pi).matrix() - P.matrix()) < 1e-15);
  CHECK(stationarity_defect(Ps, pi) < 1e-15);
  CHECK(max_abs(extract_vorticity(Ps, pi).matrix + extract_vorticity(P, pi).matrix) < 1e-16);
  CHECK(is_reversible(mult_reversibilization(P, pi), pi));
  const auto M = mixture(P, Ps);
  CHECK(is_reversible(M, pi));
  CHECK_THROWS_AS(mixture(P, guided_walk(pi, 9)), ParameterError);

  Vector lifted(4);
  lifted << 0.1, 0.2, 0.3, 0.4;
  CHECK(marginalize(lifted)(0) == doctest::Approx(0.4));
  CHECK(marginalize(lifted)(1) == doctest::Approx(0.6));
}
