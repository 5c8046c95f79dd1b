#pragma once

// n-step laws of radial walks by dynamic programming, bridges, Monte Carlo
// paths and the diffusive rescaling Y^{N,a}_t = Y_{[Nt]} / sqrt(N).

#include "chamberwalk/radial_kernel.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace chamberwalk {

class WindowTooSmallError : public Error {
 public:
  using Error::Error;
};

enum class LeakPolicy {
  error,   // any mass on the rim is an error
  absorb,  // mass reaching the rim is removed and counted as escaped
};

/// A finitely supported law on P+ indexed like the kernel it came from.
template <class Scalar>
struct LawOnCone {
  std::shared_ptr<const WeightIndex> index;
  std::vector<Scalar> mass;
  int step = 0;
  KernelKind kind = KernelKind::plain;
  Scalar escaped = Scalar(0);

  Scalar total() const;
  Scalar at(const Weight& lambda) const;
  /// (weight, mass) for nonzero masses, in index order.
  std::vector<std::pair<Weight, Scalar>> support() const;
};

/// The law after n steps from `start`.
template <class Scalar>
LawOnCone<Scalar> dp_law(const RadialKernel<Scalar>& kernel, const Weight& start, int n,
                         LeakPolicy policy = LeakPolicy::error);

/// Laws at every requested time (sorted, distinct) from one DP sweep.
template <class Scalar>
std::vector<LawOnCone<Scalar>> dp_laws(const RadialKernel<Scalar>& kernel, const Weight& start,
                                       const std::vector<int>& times, LeakPolicy policy = LeakPolicy::error);

/// One DP step in place; returns false when nothing is left.
template <class Scalar>
void dp_step(const RadialKernel<Scalar>& kernel, LawOnCone<Scalar>& law, LeakPolicy policy);

/// The smallest window that keeps n steps from lambda0 strictly inside.
inline int required_window(const Weight& lambda0, int n) { return lambda0.level() + n; }

/// Bridge ratios p_{N-n}(O, x_lambda) / p_N(O, O) of the simple walk and
/// their limit rho~^{-n} F0(lambda) / F0(0).  Per-vertex probabilities are
/// DP masses divided by N_lambda.
struct BridgeValue {
  int n = 0;
  int big_n = 0;
  Weight lambda;
  double ratio = 0;
  double target = 0;
  double rel_err = 0;
};

class BridgeEvaluator {
 public:
  /// DP of the simple walk from O for big_n steps on the smallest window
  /// that is exact for every (n <= max_n, lambda of level <= max_level).
  BridgeEvaluator(int rank, int q, int big_n, int max_n, int max_level);

  int big_n() const { return big_n_; }
  double rho() const { return rho_; }
  /// Per-vertex p_m(O, x_lambda) for m in [big_n - max_n, big_n].
  double per_vertex(int m, const Weight& lambda) const;
  /// Throws DomainError when p_N(O, O) = 0 (parity).
  BridgeValue evaluate(int n, const Weight& lambda) const;

 private:
  int rank_;
  int q_;
  int big_n_;
  int max_n_;
  double rho_;
  std::vector<LawOnCone<double>> laws_;  // laws_[k] at time big_n - max_n + k
  F0Table f0_;
};

BridgeValue bridge_ratio(int rank, int q, int n, int big_n, const Weight& lambda);

/// Weights reachable from O in exactly n steps of the simple walk.
std::vector<Weight> reachable_weights(int rank, int q, int n);

/// Streams Monte Carlo paths.  Path k uses its own generator seeded from
/// seed ^ k, so any subset of paths is reproducible on its own.
class PathSampler {
 public:
  explicit PathSampler(const RadialKernel<double>& kernel);

  /// Index path of length n_steps + 1 starting at `start`.
  void sample(const Weight& start, int n_steps, std::uint64_t seed, std::uint64_t path_index,
              std::vector<int>& out) const;

  const WeightIndex& index() const { return kernel_.index(); }

 private:
  const RadialKernel<double>& kernel_;
  std::vector<double> cumulative_;  // per entry, running row sum
};

using PathVisitor = std::function<void(std::uint64_t path_index, std::span<const int> path)>;

void mc_paths(const RadialKernel<double>& kernel, const Weight& start, int n_steps, std::uint64_t n_paths,
              std::uint64_t seed, const PathVisitor& visit);

/// Empirical law of the endpoint.
LawOnCone<double> mc_endpoint_law(const RadialKernel<double>& kernel, const Weight& start, int n_steps,
                                  std::uint64_t n_paths, std::uint64_t seed);

/// Total variation between two laws on the same index.
double total_variation(const LawOnCone<double>& a, const LawOnCone<double>& b);

/// [x]: a dominant weight at minimal Euclidean distance from x (x in the
/// closed chamber, ambient coordinates).
Weight nearest_weight(const AmbientVector<double>& x);

struct ScaledPath {
  int big_n = 1;
  AmbientVector<double> start_label;  // a
  std::vector<double> times;          // k / N
  std::vector<AmbientVector<double>> points;
};

/// t -> Y_{[Nt]} / sqrt(N) sampled at the path's own steps.
ScaledPath rescale(std::span<const Weight> path, int big_n, const AmbientVector<double>& a);

/// Ambient coordinates of lambda / sqrt(N).
AmbientVector<double> scaled_point(const Weight& lambda, int big_n);

std::uint64_t splitmix64(std::uint64_t x);
/// Uniform double in [0, 1) from the top 53 bits.
inline double unit_double(std::uint64_t x) { return static_cast<double>(x >> 11) * 0x1.0p-53; }

}  // namespace chamberwalk
