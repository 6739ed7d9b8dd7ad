#include "nrmc/analysis.hpp"
#include "nrmc/kernels.hpp"
#include "nrmc/simulate.hpp"
#include "nrmc/targets.hpp"

#include <doctest.h>

#include <cmath>
#include <random>

using namespace nrmc;

TEST_CASE("stream rng is counter based and reproducible") {
  // reference splitmix64 output for state 0: first value
  CHECK(mix64(0x9e3779b97f4a7c15ULL) == 0xe220a8397b1dcdafULL);
  StreamRng a(7, 3), b(7, 3), c(7, 4);
  for (int i = 0; i < 5; ++i) CHECK(a() == b());
  CHECK(a() != c());
  std::uint64_t state = stream_key(7, 3);
  StreamRng d(7, 3);
  state += 0x9e3779b97f4a7c15ULL;
  CHECK(d() == mix64(state));
  double lo = 1, hi = 0;
  StreamRng u(1, 0);
  for (int i = 0; i < 10000; ++i) {
    const double x = u.uniform();
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  CHECK(lo >= 0.0);
  CHECK(hi < 1.0);
  // works with standard distributions
  std::uniform_int_distribution<int> die(1, 6);
  CHECK(die(u) >= 1);
}

TEST_CASE("row sampler inverts the row cdf") {
  Matrix Q(3, 3);
  Q << 0.2, 0.0, 0.8, 0.0, 1.0, 0.0, 0.5, 0.5, 0.0;
  const RowSampler r(Q);
  CHECK(r.size() == 3);
  CHECK(r.next(0, 0.1) == 0);
  CHECK(r.next(0, 0.2) == 2);
  CHECK(r.next(0, 0.999999) == 2);
  CHECK(r.next(1, 0.0) == 1);
  CHECK(r.next(2, 0.49) == 0);
  Matrix bad = Q;
  bad.row(1).setZero();
  CHECK_THROWS_AS(RowSampler{bad}, ParameterError);
  Vector p(3);
  p << 0.0, 0.5, 0.5;
  CHECK(sample_index(p, 0.0) == 1);
  CHECK(sample_index(p, 0.75) == 2);
}

TEST_CASE("paths are reproducible and respect the kernel") {
  const Target pi = rugged_circle(10, 0.1);
  const auto P = mh(pi, neighbor_proposal_circle(10));
  const auto a = sample_path(P, pi, Index{0}, 500, 42);
  const auto b = sample_path(P, pi, Index{0}, 500, 42);
  const auto c = sample_path(P, pi, Index{0}, 500, 42, 1);
  CHECK(a.states == b.states);
  CHECK(a.states != c.states);
  CHECK(a.states.front() == 0);
  for (std::size_t t = 1; t < a.states.size(); ++t) CHECK(P(a.states[t - 1], a.states[t]) > 0.0);
  CHECK_THROWS_AS(sample_path(P, pi, Index{10}, 5, 1), ParameterError);
  CHECK_THROWS_AS(sample_path(P, pi, Index{0}, 0, 1), ParameterError);

  const auto gw = guided_walk(pi, 10);
  const auto g = sample_path(gw, pi, StationaryStart{}, 100, 3);
  for (Index x : g.states) CHECK(x < 20);
}

TEST_CASE("empirical occupation approaches pi") {
  const Target pi = rugged_circle(6, 0.5);
  const auto P = mh(pi, lazy_proposal_circle(6, 0.1));
  const auto path = sample_path(P, pi, StationaryStart{}, 400000, 9);
  Vector counts = Vector::Zero(6);
  for (Index x : path.states) counts(x) += 1;
  counts /= static_cast<double>(path.states.size());
  CHECK(tv_distance(counts, pi.probs()) < 0.01);
}

TEST_CASE("estimator distribution does not depend on the thread count") {
  const Target pi = linear_circle(9);
  const auto P = mh(pi, neighbor_proposal_circle(9));
  const auto f = test_function(pi, FunctionKind::identity);
  SimConfig cfg;
  cfg.seed = 11;
  cfg.replicas = 37;
  cfg.length = 2000;
  cfg.burn_in = 100;
  cfg.threads = 1;
  const auto one = estimator_distribution(P, pi, f, cfg);
  cfg.threads = 5;
  const auto five = estimator_distribution(P, pi, f, cfg);
  CHECK(one.averages == five.averages);
  CHECK(one.mean == five.mean);
  CHECK(one.effective_length == 1900);
  CHECK(one.rng == std::string(kRngName));
  cfg.burn_in = 2000;
  CHECK_THROWS_AS(estimator_distribution(P, pi, f, cfg), ParameterError);
}

TEST_CASE("batch means on independent draws") {
  // iid values: the estimate targets the marginal variance
  std::vector<double> v;
  StreamRng r(5, 0);
  for (int i = 0; i < 200000; ++i) v.push_back(r.uniform());
  const auto bm = batch_means_variance(v, 100);
  CHECK(bm.batch_size == 2000);
  CHECK(std::abs(bm.estimate - 1.0 / 12) < 4 * bm.standard_error);
  CHECK(bm.standard_error > 0.0);
  CHECK_THROWS_AS(batch_means_variance(v, 10), ParameterError);
  CHECK_THROWS_AS(batch_means_variance(std::vector<double>(1000, 0.0), 20), ParameterError);
}

TEST_CASE("periodicity probe") {
  const Target pi = rugged_circle(10, 0.1);
  const auto gw = guided_walk(pi, 10);
  const auto p = periodicity_probe(gw, pi, dirac(gw, 0), 2000);
  REQUIRE(p.period.has_value());
  CHECK(*p.period == 2);
  CHECK(p.tv_floor > 0.1);
  const auto q = periodicity_probe(gw_alpha(gw, 0.1), pi, dirac(gw, 0), 2000);
  CHECK_FALSE(q.period.has_value());
  CHECK(q.tv_floor < 1e-6);
  CHECK_THROWS_AS(periodicity_probe(gw, pi, dirac(gw, 0), 10), ParameterError);
}
