#include "nrmc/analysis.hpp"
#include "nrmc/kernels.hpp"
#include "nrmc/targets.hpp"

#include "../oracles.hpp"

#include <doctest.h>

#include <cmath>

using namespace nrmc;

TEST_CASE("distances") {
  Vector a(3), b(3);
  a << 1, 0, 0;
  b << 0, 0.5, 0.5;
  CHECK(tv_distance(a, b) == 1.0);
  CHECK(l2_distance(a, b) == doctest::Approx(std::sqrt(1.5)));
  CHECK_THROWS_AS(tv_distance(a, Vector(Vector::Zero(2))), ParameterError);
}

TEST_CASE("sparse and dense propagation agree") {
  const Target pi = linear_circle(41);
  const auto P = mh(pi, neighbor_proposal_circle(41));
  const Propagator prop(P.matrix());
  CHECK(prop.sparse());
  Vector mu = dirac(P, 3), ref = mu;
  for (int t = 0; t < 50; ++t) {
    prop.step(mu);
    ref = (ref.transpose() * P.matrix()).transpose();
  }
  CHECK((mu - ref).cwiseAbs().maxCoeff() < 1e-15);
  Vector f = test_function(pi, FunctionKind::identity).values, g = f;
  prop.apply(f);
  CHECK((f - P.matrix() * g).cwiseAbs().maxCoeff() < 1e-13);
  CHECK_FALSE(Propagator(Matrix::Identity(4, 4)).sparse());
}

TEST_CASE("convergence curve of a lifted kernel reports both laws") {
  const Index S = 9;
  const Target pi = linear_circle(S);
  const auto P = guided_walk(pi, S);
  const auto c = convergence_curve(P, pi, dirac(P, 0), 20);
  CHECK(c.times.size() == 21);
  CHECK(c.marginalized);
  CHECK(c.lifted_tv.size() == 21);
  CHECK(c.tv[0] == doctest::Approx(1.0 - pi(0)));
  for (int t = 0; t < S; ++t) CHECK(c.tv[t] == doctest::Approx(oracle::gw_sweep_tv(S, t)).epsilon(1e-13));
  Vector bad = dirac(P, 0);
  bad(1) = 0.5;
  CHECK_THROWS_AS(convergence_curve(P, pi, bad, 5), ParameterError);
  CHECK_THROWS_AS(convergence_curve(P, pi, Vector(Vector::Ones(S) / S), 5), ParameterError);
}

TEST_CASE("mixing time") {
  const Target pi = rugged_circle(10, 0.1);
  const auto P = mh(pi, neighbor_proposal_circle(10));
  const auto m = mixing_time(P, pi, dirac(P, 0));
  CHECK(m.reached);
  // brute force
  Vector mu = dirac(P, 0);
  std::int64_t t = 0;
  while (tv_distance(mu, pi.probs()) > 1e-5) {
    mu = (mu.transpose() * P.matrix()).transpose();
    ++t;
  }
  CHECK(m.steps == t);
  const auto capped = mixing_time(P, pi, dirac(P, 0), 1e-5, 10);
  CHECK_FALSE(capped.reached);
  CHECK(capped.steps == 10);
  CHECK_THROWS_AS(mixing_time(P, pi, dirac(P, 0), 0.0), ParameterError);

  // the joint law of a lifted chain mixes no faster than its marginal
  const auto gw = gw_alpha(guided_walk(pi, 10), 0.01);
  const auto marg = mixing_time(gw, pi, dirac(gw, 0));
  const auto joint = mixing_time(gw, pi, dirac(gw, 0), 1e-5, 1'000'000, Law::joint);
  CHECK(joint.steps >= marg.steps);
}

TEST_CASE("asymptotic variance agrees with two independent routes") {
  const Target pi = linear_circle(9);
  const auto Q = neighbor_proposal_circle(9);
  const auto f = test_function(pi, FunctionKind::identity);
  for (double s : {0.0, 0.5, 1.0}) {
    const auto P = nrmh(pi, Q, circle_vorticity(9, s / 90));
    const double v = asymptotic_variance(P, pi, f).value;
    CHECK(v == doctest::Approx(oracle::variance_fundamental(P.matrix(), pi.probs(), f.values)).epsilon(1e-11));
    CHECK(v == doctest::Approx(oracle::variance_series(P.matrix(), pi.probs(), f.values)).epsilon(1e-9));
  }
  // lifted chains use the lifted function
  const auto gw = guided_walk(pi, 9);
  const Vector lifted_f = lift_function(f).values;
  const Vector lifted_pi = lift_target(pi).probs();
  CHECK(asymptotic_variance(gw, pi, f).value ==
        doctest::Approx(oracle::variance_fundamental(gw.matrix(), lifted_pi, lifted_f)).epsilon(1e-11));
}

TEST_CASE("asymptotic variance frozen values") {
  // reference values from this implementation, cross-checked above
  const Target pi = linear_circle(9);
  const auto f = test_function(pi, FunctionKind::identity);
  CHECK(asymptotic_variance(mh(pi, neighbor_proposal_circle(9)), pi, f).value ==
        doctest::Approx(62.136236524709147).epsilon(1e-11));
  CHECK(asymptotic_variance(guided_walk(pi, 9), pi, f).value ==
        doctest::Approx(8.7851851851851848).epsilon(1e-11));
}

TEST_CASE("asymptotic variance of a periodic chain falls back to least squares") {
  const Target pi = rugged_circle(10, 0.1);
  const auto gw = guided_walk(pi, 10);
  const auto r = asymptotic_variance(gw, pi, test_function(pi, FunctionKind::identity));
  CHECK(std::isfinite(r.value));
  const auto P = mh(pi, neighbor_proposal_circle(10));
  const TransitionKernel not_invariant(P.matrix(), Space::marginal, "mh");
  CHECK_THROWS_AS(asymptotic_variance(not_invariant, uniform_circle(10), test_function(pi, FunctionKind::identity)),
                  AssumptionViolation);
}

TEST_CASE("autocorrelation and lag moments") {
  const Target pi = linear_circle(9);
  const auto P = mh(pi, neighbor_proposal_circle(9));
  const auto f = test_function(pi, FunctionKind::identity);
  CHECK(autocorrelation(P, pi, f, 0) == doctest::Approx(1.0));
  const Matrix& M = P.matrix();
  const Vector g = f.values.array() - pi.probs().dot(f.values);
  const double var = pi.probs().dot(g.cwiseProduct(g));
  CHECK(autocorrelation(P, pi, f, 3) == doctest::Approx(pi.probs().dot(g.cwiseProduct(M * M * M * g)) / var));
  CHECK_THROWS_AS(autocorrelation(P, pi, custom_function(Vector::Ones(9), "one"), 1), DegenerateInputError);

  double prod = 0, sq2 = 0;
  const Matrix M2 = M * M;
  for (int x = 0; x < 9; ++x)
    for (int y = 0; y < 9; ++y) {
      prod += pi(x) * M(x, y) * (x + 1) * (y + 1);
      sq2 += pi(x) * M2(x, y) * (y - x) * (y - x);
    }
  CHECK(lag_moment(P, pi, 1, MomentKind::product) == doctest::Approx(prod).epsilon(1e-13));
  CHECK(lag_moment(P, pi, 2, MomentKind::squared_increment) == doctest::Approx(sq2).epsilon(1e-13));
  CHECK_THROWS_AS(lag_moment(P, pi, 3, MomentKind::product), ParameterError);
}

TEST_CASE("v_lambda tends to the asymptotic variance") {
  const Target pi = rugged_circle(10, 0.5);
  const auto P = mh(pi, lazy_proposal_circle(10, 0.1));
  const auto f = test_function(pi, FunctionKind::identity);
  const auto a = v_lambda(P, pi, f, 0.0);
  CHECK(a.value == doctest::Approx(variance_under(pi, f.values)));
  const auto b = v_lambda(P, pi, f, 0.999999);
  CHECK(b.value == doctest::Approx(asymptotic_variance(P, pi, f).value).epsilon(1e-4));
  const auto c = v_lambda(P, pi, f, 0.5, 3);
  CHECK(c.terms == 3);
  CHECK_THROWS_AS(v_lambda(P, pi, f, 1.0), ParameterError);
}

TEST_CASE("spectra") {
  const Target pi = rugged_circle(4, 0.5);
  const auto r = spectrum(mh(pi, neighbor_proposal_circle(4)), pi);
  CHECK(r.slem == doctest::Approx(0.5));
  CHECK(r.spectral_gap == doctest::Approx(0.5));
  const Vector ev = reversible_eigenvalues(mh(pi, neighbor_proposal_circle(4)), pi);
  CHECK(ev(0) == doctest::Approx(-0.5));
  CHECK(ev(3) == doctest::Approx(1.0));

  const Target lin = linear_circle(9);
  const auto P = nrmh(lin, neighbor_proposal_circle(9), circle_vorticity(9, 1.0 / 90));
  const auto s = spectrum(P, lin);
  CHECK(s.eigenvalues.size() == 9);
  // top of P P* on mean-zero functions equals the second eigenvalue of P P*
  const Vector pp = reversible_eigenvalues(mult_reversibilization(P, lin), lin);
  CHECK(reversibilization_top(P, lin) == doctest::Approx(pp(7)).epsilon(1e-12));
  CHECK(s.reversibilization_top == doctest::Approx(pp(7)).epsilon(1e-12));
}

TEST_CASE("conductance against brute force") {
  for (Index S : {5, 7, 9}) {
    const Target pi = linear_circle(S);
    const auto P = mh(pi, neighbor_proposal_circle(S));
    const double brute = oracle::conductance_bruteforce(P.matrix(), pi.probs());
    CHECK(conductance(P, pi, ConductanceMode::exhaustive) == doctest::Approx(brute).epsilon(1e-14));
    CHECK(conductance(P, pi, ConductanceMode::arcs) == doctest::Approx(brute).epsilon(1e-14));
  }
  const Target pi = linear_circle(5);
  const auto gw = guided_walk(pi, 5);
  const double brute = oracle::conductance_bruteforce(gw.matrix(), lift_target(pi).probs());
  CHECK(conductance(gw, pi, ConductanceMode::exhaustive) == doctest::Approx(brute).epsilon(1e-14));
  CHECK_THROWS_AS(conductance(mh(linear_circle(25), neighbor_proposal_circle(25)), linear_circle(25),
                              ConductanceMode::exhaustive),
                  ResourceError);
  const auto [lo, hi] = cheeger_bounds(0.25);
  CHECK(lo == 0.5);
  CHECK(hi == 0.9375);
}

TEST_CASE("odd path bound") {
  const Index S = 9;
  const Target pi = linear_circle(S);
  const auto P = mh(pi, neighbor_proposal_circle(S));
  const auto paths = circle_canonical_paths(S);
  CHECK(paths.size() == static_cast<std::size_t>(S));
  CHECK(paths[0].size() == static_cast<std::size_t>(S + 1));
  const auto b = odd_path_bound(P, pi, paths);
  // independent: circuit load and self-loop loads
  double circuit = 0, worst = 0;
  for (Index x = 0; x < S; ++x) circuit += 1.0 / (pi(x) * P(x, (x + 1) % S));
  worst = circuit * pi(0);
  for (Index x = 1; x < S; ++x) worst = std::max(worst, 1.0 / P(x, x));
  CHECK(b.iota == doctest::Approx(worst).epsilon(1e-13));
  CHECK(b.eig_lower == doctest::Approx(-1 + 2 / worst));
  CHECK(b.eig_lower <= reversible_eigenvalues(P, pi)(0));

  auto even = paths;
  even[1] = {1, 2, 1};
  CHECK_THROWS_AS(odd_path_bound(P, pi, even), ParameterError);
  CHECK_THROWS_AS(circle_canonical_paths(8), ParameterError);
}

TEST_CASE("alpha search") {
  const Target pi = rugged_circle(10, 0.1);
  const auto gw = guided_walk(pi, 10);
  const auto ref = mixing_time(mh(pi, neighbor_proposal_circle(10)), pi, dirac(gw, 0).head(10)).steps;
  const auto r = alpha_star_search([&](double a) { return gw_alpha(gw, a); }, pi, dirac(gw, 0), ref);
  REQUIRE(r.alpha.has_value());
  CHECK(*r.alpha > 0.0);
  CHECK(r.tau <= ref);
  CHECK(r.evaluations > 1);
  const auto none = alpha_star_search([&](double a) { return gw_alpha(gw, a); }, pi, dirac(gw, 0), 3);
  CHECK_FALSE(none.alpha.has_value());
}
