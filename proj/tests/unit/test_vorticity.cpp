#include "nrmc/kernels.hpp"
#include "nrmc/targets.hpp"
#include "nrmc/vorticity.hpp"

#include <doctest.h>

using namespace nrmc;

namespace {
double max_row_sum(const Matrix& m) { return m.rowwise().sum().cwiseAbs().maxCoeff(); }
}

TEST_CASE("circle field is skew with zero row sums") {
  const auto g = circle_vorticity(7, 0.01);
  CHECK((g.matrix + g.matrix.transpose()).cwiseAbs().maxCoeff() == 0.0);
  CHECK(max_row_sum(g.matrix) == 0.0);
  CHECK(g(0, 1) == 0.01);
  CHECK(g(0, 6) == -0.01);
  CHECK(g(6, 0) == 0.01);
  CHECK(g.negated()(0, 1) == -0.01);
}

TEST_CASE("grid field circulates around two-row loops") {
  for (Index S : {4, 5, 30}) {
    const auto g = grid_vorticity(S, 1.0);
    CHECK((g.matrix + g.matrix.transpose()).cwiseAbs().maxCoeff() == 0.0);
    CHECK(max_row_sum(g.matrix) < 1e-15);
    // every edge of a loop carries the same magnitude
    CHECK(g.matrix.cwiseAbs().maxCoeff() == 1.0);
  }
  const auto g5 = grid_vorticity(5, 1.0);
  // last row of an odd grid has no circulation
  CHECK(g5.matrix.row(grid_index(4, 2, 5)).cwiseAbs().sum() == 0.0);
}

TEST_CASE("zeta max on the linear circle") {
  // -zeta >= -pi(y) Q(y,x) with the smallest pi(y) Q(y,x) = (1/45)(1/2)
  const Target pi = linear_circle(9);
  const auto Q = neighbor_proposal_circle(9);
  CHECK(zeta_max(pi, Q, circle_vorticity(9, 1.0)) == doctest::Approx(1.0 / 90).epsilon(1e-14));
  VorticityField zero{Matrix::Zero(9, 9), 0.0};
  CHECK_THROWS_AS(zeta_max(pi, Q, zero), DegenerateInputError);
}

TEST_CASE("validation flags each assumption") {
  const Target pi = linear_circle(9);
  const auto Q = neighbor_proposal_circle(9);
  const double zm = 1.0 / 90;

  auto ok = validate(circle_vorticity(9, zm), pi, Q);
  CHECK(ok.all_passed());
  CHECK_FALSE(ok.zero_field);
  CHECK(validate(circle_vorticity(9, 0.0), pi, Q).zero_field);

  auto big = validate(circle_vorticity(9, 1.01 * zm), pi, Q);
  CHECK_FALSE(big.lower_bound.passed);
  CHECK(big.lower_bound.row >= 0);

  auto g = circle_vorticity(9, zm / 2);
  g.matrix(0, 1) += 1e-6;
  auto bad = validate(g, pi, Q);
  CHECK_FALSE(bad.skew_symmetry.passed);
  CHECK_FALSE(bad.zero_row_sums.passed);
  CHECK_THROWS_AS(require_valid(bad), AssumptionViolation);

  // one-way proposal edge
  Matrix q = Q.matrix();
  q(0, 4) = 0.1;
  q(0, 1) -= 0.1;
  CHECK_FALSE(validate(circle_vorticity(9, 0.0), pi, ProposalKernel(q, "oneway")).symmetric_structure.passed);

  try {
    require_valid(big);
    FAIL("expected a violation");
  } catch (const AssumptionViolation& e) {
    CHECK(e.residual() > 0);
    CHECK(e.assumption().find("lower") != std::string::npos);
  }
}

TEST_CASE("extracted vorticity of a reversible kernel vanishes") {
  const Target pi = rugged_circle(10, 0.1);
  const auto P = mh(pi, neighbor_proposal_circle(10));
  CHECK(extract_vorticity(P, pi).matrix.cwiseAbs().maxCoeff() < 1e-16);
}
