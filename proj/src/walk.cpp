#include "chamberwalk/walk.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace chamberwalk {

namespace {

bool is_zero(double x) { return x == 0.0; }
bool is_zero(const QuadraticSurd& x) { return x.is_zero(); }

template <class Scalar>
Scalar zero_like() {
  return Scalar(0);
}

}  // namespace

template <class Scalar>
Scalar LawOnCone<Scalar>::total() const {
  Scalar s = zero_like<Scalar>();
  for (const auto& m : mass) s += m;
  return s;
}

template <class Scalar>
Scalar LawOnCone<Scalar>::at(const Weight& lambda) const {
  const int k = index->find(lambda);
  return k < 0 ? zero_like<Scalar>() : mass[k];
}

template <class Scalar>
std::vector<std::pair<Weight, Scalar>> LawOnCone<Scalar>::support() const {
  std::vector<std::pair<Weight, Scalar>> out;
  for (std::size_t k = 0; k < mass.size(); ++k)
    if (!is_zero(mass[k])) out.emplace_back(index->weight(static_cast<int>(k)), mass[k]);
  return out;
}

template <class Scalar>
void dp_step(const RadialKernel<Scalar>& kernel, LawOnCone<Scalar>& law, LeakPolicy policy) {
  const WeightIndex& index = kernel.index();
  std::vector<Scalar> next(law.mass.size(), zero_like<Scalar>());
  for (int k = 0; k < index.size(); ++k) {
    const Scalar& m = law.mass[k];
    if (is_zero(m)) continue;
    for (int e = kernel.row_begin(k); e < kernel.row_end(k); ++e) next[kernel.col(e)] += m * kernel.value(e);
  }
  for (int k = index.size() - 1; k >= 0 && index.on_rim(k); --k) {
    if (is_zero(next[k])) continue;
    if (policy == LeakPolicy::error) {
      std::ostringstream os;
      os << "dp: mass reached the rim (level " << index.weight(k).level() << ") at step " << law.step + 1
         << "; window " << index.window() << " is too small";
      throw WindowTooSmallError(os.str());
    }
    law.escaped += next[k];
    next[k] = zero_like<Scalar>();
  }
  law.mass = std::move(next);
  ++law.step;
}

template <class Scalar>
std::vector<LawOnCone<Scalar>> dp_laws(const RadialKernel<Scalar>& kernel, const Weight& start,
                                       const std::vector<int>& times, LeakPolicy policy) {
  if (!std::is_sorted(times.begin(), times.end()) || std::adjacent_find(times.begin(), times.end()) != times.end())
    throw DomainError("dp_laws: times must be sorted and distinct");
  if (!times.empty() && times.front() < 0) throw DomainError("dp_laws: negative time");
  const int k0 = kernel.index().find(start);
  if (k0 < 0 || kernel.index().on_rim(k0)) throw WindowTooSmallError("dp: start " + to_string(start) + " outside the window");

  LawOnCone<Scalar> law;
  law.index = kernel.index_ptr();
  law.kind = kernel.kind();
  law.mass.assign(kernel.index().size(), zero_like<Scalar>());
  if constexpr (std::is_same_v<Scalar, double>) {
    law.mass[k0] = 1.0;
  } else {
    law.mass[k0] = Scalar(0, Rational(1));
  }

  std::vector<LawOnCone<Scalar>> out;
  out.reserve(times.size());
  for (int t : times) {
    while (law.step < t) dp_step(kernel, law, policy);
    out.push_back(law);
  }
  return out;
}

template <class Scalar>
LawOnCone<Scalar> dp_law(const RadialKernel<Scalar>& kernel, const Weight& start, int n, LeakPolicy policy) {
  return dp_laws(kernel, start, std::vector<int>{n}, policy).front();
}

template struct LawOnCone<double>;
template struct LawOnCone<QuadraticSurd>;
template void dp_step(const RadialKernel<double>&, LawOnCone<double>&, LeakPolicy);
template void dp_step(const RadialKernel<QuadraticSurd>&, LawOnCone<QuadraticSurd>&, LeakPolicy);
template std::vector<LawOnCone<double>> dp_laws(const RadialKernel<double>&, const Weight&, const std::vector<int>&,
                                                LeakPolicy);
template std::vector<LawOnCone<QuadraticSurd>> dp_laws(const RadialKernel<QuadraticSurd>&, const Weight&,
                                                       const std::vector<int>&, LeakPolicy);
template LawOnCone<double> dp_law(const RadialKernel<double>&, const Weight&, int, LeakPolicy);
template LawOnCone<QuadraticSurd> dp_law(const RadialKernel<QuadraticSurd>&, const Weight&, int, LeakPolicy);

// ---------------------------------------------------------------------------
// bridges

BridgeEvaluator::BridgeEvaluator(int rank, int q, int big_n, int max_n, int max_level)
    : rank_(rank), q_(q), big_n_(big_n), max_n_(max_n) {
  if (max_n < 0 || big_n < max_n) throw DomainError("bridge: need 0 <= n <= N");
  if (max_level < 0) throw DomainError("bridge: negative level");
  rho_ = spectral_gap(simple_rw_params(rank, q));
  // A path that climbs above level (N + L) / 2 cannot be back at level <= L by time N.
  const int window = (big_n + max_level + 1) / 2;
  const StepCountTable counts = solve_step_counts(rank, q, window);
  const RadialKernel<double> kernel = assemble_kernel<double>(simple_rw_params(rank, q), counts);
  std::vector<int> times;
  for (int m = big_n - max_n; m <= big_n; ++m) times.push_back(m);
  laws_ = dp_laws(kernel, Weight::zero(rank), times, LeakPolicy::absorb);
  f0_ = F0Table(rank, q, max_level);
}

double BridgeEvaluator::per_vertex(int m, const Weight& lambda) const {
  const int k = m - (big_n_ - max_n_);
  if (k < 0 || k > max_n_) throw DomainError("bridge: time outside the stored range");
  if (lambda.level() > f0_.window()) throw DomainError("bridge: weight beyond the exact range");
  return laws_[k].at(lambda) / n_lambda(lambda, q_).convert_to<double>();
}

BridgeValue BridgeEvaluator::evaluate(int n, const Weight& lambda) const {
  if (n < 0 || n > max_n_) throw DomainError("bridge: n outside [0, max_n]");
  const double denom = per_vertex(big_n_, Weight::zero(rank_));
  if (denom == 0.0) {
    std::ostringstream os;
    os << "bridge: p_N(O, O) = 0 for N = " << big_n_ << " (parity); choose N even";
    throw DomainError(os.str());
  }
  BridgeValue v;
  v.n = n;
  v.big_n = big_n_;
  v.lambda = lambda;
  v.ratio = per_vertex(big_n_ - n, lambda) / denom;
  v.target = std::pow(rho_, -n) * f0_.ratio(lambda, Weight::zero(rank_));
  v.rel_err = v.ratio / v.target - 1.0;
  return v;
}

BridgeValue bridge_ratio(int rank, int q, int n, int big_n, const Weight& lambda) {
  return BridgeEvaluator(rank, q, big_n, n, lambda.level()).evaluate(n, lambda);
}

std::vector<Weight> reachable_weights(int rank, int q, int n) {
  const StepCountTable counts = solve_step_counts(rank, q, n);
  const auto kernel = assemble_kernel<double>(simple_rw_params(rank, q), counts);
  std::vector<Weight> out;
  for (const auto& [w, m] : dp_law(kernel, Weight::zero(rank), n).support()) out.push_back(w);
  return out;
}

// ---------------------------------------------------------------------------
// Monte Carlo

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

PathSampler::PathSampler(const RadialKernel<double>& kernel) : kernel_(kernel) {
  cumulative_.resize(kernel.nonzeros());
  for (int k = 0; k < kernel.num_rows(); ++k) {
    double s = 0;
    for (int e = kernel.row_begin(k); e < kernel.row_end(k); ++e) {
      s += kernel.value(e);
      cumulative_[e] = s;
    }
  }
}

void PathSampler::sample(const Weight& start, int n_steps, std::uint64_t seed, std::uint64_t path_index,
                         std::vector<int>& out) const {
  const WeightIndex& index = kernel_.index();
  int k = index.find(start);
  if (k < 0 || index.on_rim(k)) throw WindowTooSmallError("mc: start " + to_string(start) + " outside the window");
  std::mt19937_64 rng(splitmix64(seed ^ path_index));
  out.resize(static_cast<std::size_t>(n_steps) + 1);
  out[0] = k;
  for (int s = 1; s <= n_steps; ++s) {
    if (index.on_rim(k)) {
      std::ostringstream os;
      os << "mc: path " << path_index << " reached the rim at step " << s - 1 << "; window " << index.window()
         << " is too small";
      throw WindowTooSmallError(os.str());
    }
    const int b = kernel_.row_begin(k);
    const int e = kernel_.row_end(k);
    const double u = unit_double(rng()) * cumulative_[e - 1];
    auto it = std::upper_bound(cumulative_.begin() + b, cumulative_.begin() + e, u);
    if (it == cumulative_.begin() + e) --it;
    k = kernel_.col(static_cast<int>(it - cumulative_.begin()));
    out[s] = k;
  }
}

void mc_paths(const RadialKernel<double>& kernel, const Weight& start, int n_steps, std::uint64_t n_paths,
              std::uint64_t seed, const PathVisitor& visit) {
  const PathSampler sampler(kernel);
  std::vector<int> path;
  for (std::uint64_t i = 0; i < n_paths; ++i) {
    sampler.sample(start, n_steps, seed, i, path);
    visit(i, path);
  }
}

LawOnCone<double> mc_endpoint_law(const RadialKernel<double>& kernel, const Weight& start, int n_steps,
                                  std::uint64_t n_paths, std::uint64_t seed) {
  std::vector<std::uint64_t> counts(kernel.index().size(), 0);
  mc_paths(kernel, start, n_steps, n_paths, seed,
           [&](std::uint64_t, std::span<const int> path) { ++counts[path.back()]; });
  LawOnCone<double> law;
  law.index = kernel.index_ptr();
  law.kind = kernel.kind();
  law.step = n_steps;
  law.mass.resize(counts.size());
  for (std::size_t k = 0; k < counts.size(); ++k)
    law.mass[k] = static_cast<double>(counts[k]) / static_cast<double>(n_paths);
  return law;
}

double total_variation(const LawOnCone<double>& a, const LawOnCone<double>& b) {
  if (a.index.get() != b.index.get() && a.index->size() != b.index->size())
    throw DomainError("total_variation: laws on different indices");
  double s = std::abs(a.escaped - b.escaped);
  for (std::size_t k = 0; k < a.mass.size(); ++k) s += std::abs(a.mass[k] - b.mass[k]);
  return 0.5 * s;
}

// ---------------------------------------------------------------------------
// rescaling

Weight nearest_weight(const AmbientVector<double>& x) {
  const int n = static_cast<int>(x.size());
  if (n < 2) throw DomainError("nearest_weight: rank must be >= 1");
  const double mean = x.mean();
  Eigen::VectorXi lo(n);
  std::vector<std::pair<double, int>> frac(n);
  for (int k = 0; k < n; ++k) {
    const double y = x[k] - mean;
    lo[k] = static_cast<int>(std::floor(y));
    frac[k] = {y - lo[k], k};
  }
  std::sort(frac.begin(), frac.end(), [](const auto& u, const auto& v) { return u.first > v.first; });

  // Each coset of the root lattice in P is reached by rounding up the j
  // largest fractional parts.
  Eigen::VectorXi best;
  double best_d = INFINITY;
  Eigen::VectorXi z = lo;
  for (int j = 0; j < n; ++j) {
    if (j > 0) z[frac[j - 1].second] += 1;
    AmbientVector<double> v(n);
    const double zm = z.cast<double>().mean();
    for (int k = 0; k < n; ++k) v[k] = z[k] - zm - (x[k] - mean);
    const double d = v.squaredNorm();
    if (d < best_d - 1e-12) {
      best_d = d;
      best = z;
    }
  }
  Eigen::VectorXi m(n - 1);
  for (int k = 0; k + 1 < n; ++k) m[k] = best[k] - best[k + 1];
  return dominant(Weight(m));
}

AmbientVector<double> scaled_point(const Weight& lambda, int big_n) {
  return ambient<double>(lambda) / std::sqrt(static_cast<double>(big_n));
}

ScaledPath rescale(std::span<const Weight> path, int big_n, const AmbientVector<double>& a) {
  if (big_n < 1) throw DomainError("rescale: N must be >= 1");
  ScaledPath out;
  out.big_n = big_n;
  out.start_label = a;
  out.times.reserve(path.size());
  out.points.reserve(path.size());
  for (std::size_t k = 0; k < path.size(); ++k) {
    out.times.push_back(static_cast<double>(k) / big_n);
    out.points.push_back(scaled_point(path[k], big_n));
  }
  return out;
}

}  // namespace chamberwalk
