#pragma once

#include "nrmc/types.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace nrmc {

//------------------------------------------------------------------------------
// Random numbers
//------------------------------------------------------------------------------

inline constexpr const char* kRngName = "splitmix64/stream-hash-v1";

/// SplitMix64 output function.
std::uint64_t mix64(std::uint64_t z);

/// Key of replica stream `stream` under master seed `seed`:
/// mix64(seed ^ mix64(stream + 0x632be59bd9b4e019)).
std::uint64_t stream_key(std::uint64_t seed, std::uint64_t stream);

/// Counter-based stream: the n-th draw is mix64(key + (n + 1) * 0x9e3779b97f4a7c15),
/// i.e. a SplitMix64 sequence started at `key`. Period 2^64 per stream.
class StreamRng {
 public:
  using result_type = std::uint64_t;

  StreamRng(std::uint64_t seed, std::uint64_t stream) : state_(stream_key(seed, stream)) {}

  std::uint64_t operator()();
  // Uniform in [0, 1) with 53 random bits.
  double uniform();

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return ~result_type{0}; }

 private:
  std::uint64_t state_;
};

//------------------------------------------------------------------------------
// Sampling
//------------------------------------------------------------------------------

/// Inverse-CDF sampler over the nonzero entries of each kernel row.
class RowSampler {
 public:
  explicit RowSampler(const Matrix& P);

  Index next(Index state, double u) const;
  Index size() const { return static_cast<Index>(offsets_.size()) - 1; }

 private:
  std::vector<std::size_t> offsets_;
  std::vector<double> cumulative_;
  std::vector<Index> columns_;
};

/// Index i with cdf(i-1) <= u < cdf(i) for a probability vector.
Index sample_index(const Vector& probs, double u);

// A fixed 0-based start state, an explicit start distribution, or the
// stationary law of the kernel.
struct StationaryStart {};
using Start = std::variant<Index, Vector, StationaryStart>;

struct SimConfig {
  std::uint64_t seed = 1;
  std::int64_t replicas = 1;
  std::int64_t length = 1000;  // states per path including X_0
  std::int64_t burn_in = 0;
  Start start = StationaryStart{};
  unsigned threads = 0;  // 0: hardware concurrency

  void check() const;
};

struct Path {
  std::vector<Index> states;
  std::string kernel;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
};

/// X_0 from `start`, then `length - 1` transitions. Stationary starts draw
/// x ~ pi and, for lifted kernels, the momentum uniformly.
Path sample_path(const TransitionKernel& P, const Target& pi, const Start& start,
                 std::int64_t length, std::uint64_t seed, std::uint64_t stream = 0);

struct EstimatorSample {
  std::vector<double> averages;  // one per replica
  std::int64_t effective_length = 0;  // length - burn_in
  double mean = 0.0;
  double variance = 0.0;        // across replicas (unbiased)
  double scaled_variance = 0.0; // effective_length * variance
  double scaled_variance_se = 0.0;
  std::string rng = kRngName;
  std::uint64_t seed = 0;
};

/// L independent replica averages (1/T) sum f(X_t) over the post burn-in
/// states. Replica r uses stream r of the master seed.
EstimatorSample estimator_distribution(const TransitionKernel& P, const Target& pi,
                                       const TestFunction& f, const SimConfig& config);

struct BatchMeans {
  double estimate = 0.0;
  double standard_error = 0.0;  // jackknife over batches
  std::int64_t batches = 0;
  std::int64_t batch_size = 0;
};

/// Batch-means estimate of v(f, P) from one path. Needs >= 20 batches of
/// >= 100 states; a trailing partial batch is dropped.
BatchMeans batch_means_variance(const Path& path, const TestFunction& f, std::int64_t batches);
BatchMeans batch_means_variance(const std::vector<double>& values, std::int64_t batches);

struct PeriodicityReport {
  std::optional<int> period;
  double tv_floor = 0.0;
  double period_residual = 0.0;
};

inline constexpr double kPeriodFloor = 0.1;
inline constexpr double kPeriodResidual = 1e-8;

/// Iterates the exact law for `horizon` steps. A period d >= 2 is reported
/// when TV(mu_T, mu_{T-d}) < 1e-8 for the smallest such d <= 8 while the TV
/// distance to the stationary law stays above 0.1 over the second half of the
/// window. tv_floor is the minimum of that distance over the same window.
PeriodicityReport periodicity_probe(const TransitionKernel& P, const Target& pi, const Vector& mu0,
                                    std::int64_t horizon);

}  // namespace nrmc
