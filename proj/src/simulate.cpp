#include "nrmc/simulate.hpp"

#include "nrmc/analysis.hpp"
#include "nrmc/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <thread>

namespace nrmc {

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
}

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t stream_key(std::uint64_t seed, std::uint64_t stream) {
  return mix64(seed ^ mix64(stream + 0x632be59bd9b4e019ULL));
}

std::uint64_t StreamRng::operator()() {
  state_ += kGolden;
  return mix64(state_);
}

double StreamRng::uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

//------------------------------------------------------------------------------
// Sampling
//------------------------------------------------------------------------------

RowSampler::RowSampler(const Matrix& P) {
  const Index n = P.rows();
  offsets_.reserve(static_cast<std::size_t>(n) + 1);
  offsets_.push_back(0);
  for (Index x = 0; x < n; ++x) {
    double acc = 0.0;
    for (Index y = 0; y < n; ++y) {
      if (P(x, y) <= 0.0) continue;
      acc += P(x, y);
      cumulative_.push_back(acc);
      columns_.push_back(y);
    }
    if (cumulative_.size() == offsets_.back())
      throw ParameterError("RowSampler: row " + std::to_string(x + 1) + " has no mass");
    offsets_.push_back(cumulative_.size());
  }
}

Index RowSampler::next(Index state, double u) const {
  const auto lo = cumulative_.begin() + static_cast<std::ptrdiff_t>(offsets_[state]);
  const auto hi = cumulative_.begin() + static_cast<std::ptrdiff_t>(offsets_[state + 1]);
  // scale by the stored row total so that rounding in the row sum never
  // pushes u past the last entry
  const double target = u * *(hi - 1);
  auto it = std::upper_bound(lo, hi, target);
  if (it == hi) --it;
  return columns_[static_cast<std::size_t>(it - cumulative_.begin())];
}

Index sample_index(const Vector& probs, double u) {
  const double target = u * probs.sum();
  double acc = 0.0;
  Index last = -1;
  for (Index i = 0; i < probs.size(); ++i) {
    if (probs(i) <= 0.0) continue;
    acc += probs(i);
    last = i;
    if (target < acc) return i;
  }
  if (last < 0) throw ParameterError("sample_index: no positive mass");
  return last;
}

void SimConfig::check() const {
  if (replicas < 1) throw ParameterError("SimConfig: replicas must be >= 1");
  if (length < 1) throw ParameterError("SimConfig: length must be >= 1");
  if (burn_in < 0 || burn_in >= length)
    throw ParameterError("SimConfig: burn-in must lie in [0, length)");
}

namespace {

Index draw_start(const TransitionKernel& P, const Target& pi, const Start& start, StreamRng& rng) {
  if (const Index* x = std::get_if<Index>(&start)) {
    if (*x < 0 || *x >= P.size()) throw ParameterError("start state out of range");
    return *x;
  }
  if (const Vector* mu = std::get_if<Vector>(&start)) {
    if (mu->size() != P.size()) throw ParameterError("start law has the wrong length");
    return sample_index(*mu, rng.uniform());
  }
  if (P.lifted() && pi.size() == P.base_size()) {
    const Index x = sample_index(pi.probs(), rng.uniform());
    const int zeta = rng.uniform() < 0.5 ? 1 : -1;
    return lifted_index(x, zeta, P.base_size());
  }
  return sample_index(target_for(P, pi).probs(), rng.uniform());
}

template <typename Visit>
void run_chain(const TransitionKernel& P, const RowSampler& sampler, const Target& pi,
               const Start& start, std::int64_t length, StreamRng& rng, Visit&& visit) {
  Index x = draw_start(P, pi, start, rng);
  visit(0, x);
  for (std::int64_t t = 1; t < length; ++t) {
    x = sampler.next(x, rng.uniform());
    visit(t, x);
  }
}

double value_at(const Vector& f, Index state) {
  const Index n = f.size();
  if (state < n) return f(state);
  if (state < 2 * n) return f(state - n);
  throw ParameterError("test function is shorter than the state space");
}

}  // namespace

Path sample_path(const TransitionKernel& P, const Target& pi, const Start& start,
                 std::int64_t length, std::uint64_t seed, std::uint64_t stream) {
  if (length < 1) throw ParameterError("sample_path: length must be >= 1");
  const RowSampler sampler(P.matrix());
  StreamRng rng(seed, stream);
  Path path;
  path.kernel = P.label();
  path.seed = seed;
  path.stream = stream;
  path.states.reserve(static_cast<std::size_t>(length));
  run_chain(P, sampler, pi, start, length, rng, [&](std::int64_t, Index x) { path.states.push_back(x); });
  return path;
}

EstimatorSample estimator_distribution(const TransitionKernel& P, const Target& pi,
                                       const TestFunction& f, const SimConfig& config) {
  config.check();
  const TestFunction ff = function_for(P, f);
  const RowSampler sampler(P.matrix());
  const auto L = static_cast<std::size_t>(config.replicas);

  EstimatorSample out;
  out.seed = config.seed;
  out.effective_length = config.length - config.burn_in;
  out.averages.assign(L, 0.0);

  auto work = [&](std::size_t first, std::size_t stride) {
    for (std::size_t r = first; r < L; r += stride) {
      StreamRng rng(config.seed, r);
      double sum = 0.0;
      run_chain(P, sampler, pi, config.start, config.length, rng, [&](std::int64_t t, Index x) {
        if (t >= config.burn_in) sum += ff.values(x);
      });
      out.averages[r] = sum / static_cast<double>(out.effective_length);
    }
  };

  unsigned threads = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, L));
  if (threads <= 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
    for (auto& th : pool) th.join();
  }

  // fixed summation order keeps the merge bit-reproducible
  double sum = 0.0;
  for (double a : out.averages) sum += a;
  out.mean = sum / static_cast<double>(L);
  if (L >= 2) {
    double m2 = 0.0, m4 = 0.0;
    for (double a : out.averages) {
      const double d = a - out.mean;
      m2 += d * d;
      m4 += d * d * d * d;
    }
    const double n = static_cast<double>(L);
    out.variance = m2 / (n - 1.0);
    m4 /= n;
    // large-sample standard error of the sample variance
    const double var_s2 = (m4 - (n - 3.0) / (n - 1.0) * out.variance * out.variance) / n;
    out.scaled_variance_se =
        static_cast<double>(out.effective_length) * std::sqrt(std::max(0.0, var_s2));
  }
  out.scaled_variance = static_cast<double>(out.effective_length) * out.variance;
  return out;
}

BatchMeans batch_means_variance(const std::vector<double>& values, std::int64_t batches) {
  if (batches < 20) throw ParameterError("batch_means_variance: need at least 20 batches");
  const auto n = static_cast<std::int64_t>(values.size());
  const std::int64_t size = n / batches;
  if (size < 100)
    throw ParameterError("batch_means_variance: batches must hold at least 100 states");

  std::vector<double> means(static_cast<std::size_t>(batches));
  for (std::int64_t b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::int64_t k = 0; k < size; ++k) s += values[static_cast<std::size_t>(b * size + k)];
    means[static_cast<std::size_t>(b)] = s / static_cast<double>(size);
  }
  const double B = static_cast<double>(batches);
  double grand = 0.0;
  for (double m : means) grand += m;
  grand /= B;
  double ss = 0.0;
  for (double m : means) ss += (m - grand) * (m - grand);

  BatchMeans out;
  out.batches = batches;
  out.batch_size = size;
  out.estimate = static_cast<double>(size) * ss / (B - 1.0);

  // leave-one-batch-out: the remaining sum of squares is ss - d_i^2 B / (B - 1)
  std::vector<double> loo(means.size());
  double loo_mean = 0.0;
  for (std::size_t i = 0; i < means.size(); ++i) {
    const double d = means[i] - grand;
    loo[i] = static_cast<double>(size) * (ss - d * d * B / (B - 1.0)) / (B - 2.0);
    loo_mean += loo[i];
  }
  loo_mean /= B;
  double spread = 0.0;
  for (double v : loo) spread += (v - loo_mean) * (v - loo_mean);
  out.standard_error = std::sqrt((B - 1.0) / B * spread);
  return out;
}

BatchMeans batch_means_variance(const Path& path, const TestFunction& f, std::int64_t batches) {
  std::vector<double> values;
  values.reserve(path.states.size());
  for (Index x : path.states) values.push_back(value_at(f.values, x));
  return batch_means_variance(values, batches);
}

PeriodicityReport periodicity_probe(const TransitionKernel& P, const Target& pi, const Vector& mu0,
                                    std::int64_t horizon) {
  if (horizon < 100) throw ParameterError("periodicity_probe: horizon must be >= 100");
  if (mu0.size() != P.size()) throw ParameterError("periodicity_probe: initial law has the wrong length");
  const Vector target = target_for(P, pi).probs();
  constexpr int kMaxPeriod = 8;

  Propagator prop(P.matrix());
  Vector mu = mu0;
  std::deque<Vector> recent;  // mu_{t-kMaxPeriod}..mu_t
  PeriodicityReport rep;
  rep.tv_floor = std::numeric_limits<double>::infinity();
  for (std::int64_t t = 0; t <= horizon; ++t) {
    if (t > 0) prop.step(mu);
    if (2 * t >= horizon) rep.tv_floor = std::min(rep.tv_floor, tv_distance(mu, target));
    recent.push_back(mu);
    if (recent.size() > kMaxPeriod + 1) recent.pop_front();
  }

  const Vector& last = recent.back();
  rep.period_residual = std::numeric_limits<double>::infinity();
  int found = 0;
  for (int d = 1; d <= kMaxPeriod; ++d) {
    const double r = tv_distance(last, recent[recent.size() - 1 - static_cast<std::size_t>(d)]);
    if (r < kPeriodResidual) {
      found = d;
      rep.period_residual = r;
      break;
    }
    if (d >= 2) rep.period_residual = std::min(rep.period_residual, r);
  }
  // d = 1 means the law has settled (possibly on a non-stationary fixed
  // point of a reducible chain): no periodicity
  if (found >= 2 && rep.tv_floor > kPeriodFloor) rep.period = found;
  return rep;
}

}  // namespace nrmc
