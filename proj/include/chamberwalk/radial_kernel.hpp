#pragma once

// One-step transition kernels of radial nearest-neighbour walks on P+.
//
// K(lambda, i, mu) = |V_mu(O) ∩ V_{lambda_i}(x_lambda)| is the number of type-i
// neighbours of a vertex at radius lambda that sit at radius mu.  Interior
// rows have a closed form; rows on the walls are recovered by constraint
// propagation (row sums, reversibility, the origin), with the straightening
// rule filling what propagation leaves open.

#include "chamberwalk/macdonald.hpp"
#include "chamberwalk/numeric.hpp"
#include "chamberwalk/q_combinatorics.hpp"
#include "chamberwalk/root_system.hpp"

#include <Eigen/SparseCore>

#include <array>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace chamberwalk {

/// p_i for i = 1..r: the probability of each single vertex in V_{lambda_i}(x).
struct StepDistribution {
  int rank = 1;
  int q = 2;
  std::vector<QuadraticSurd> p;

  double prob(int i) const { return p.at(i - 1).to_double(); }
  /// p_i = p_{r+1-i}.
  bool symmetric() const;
  /// Throws DomainError unless every p_i > 0 and sum p_i N_{lambda_i} = 1 exactly.
  void validate() const;
};

/// The simple random walk: p_i = q_{t_i}^{-1/2} / sum_j q_{t_j}^{-1/2} N_{lambda_j}.
/// q = 1 is accepted and gives the flat walk on P (uniform over the h(0) neighbours).
StepDistribution simple_rw_params(int rank, int q);
inline StepDistribution simple_rw_params(const RankConfig& cfg) { return simple_rw_params(cfg.rank, cfg.q); }

/// p_i proportional to weights[i-1], normalized by sum_i p_i N_{lambda_i} = 1.
StepDistribution step_distribution_from_weights(int rank, int q, const std::vector<Rational>& weights);

/// rho~ = sum_i p_i q_{t_i}^{1/2} |W0 lambda_i|, exactly.
QuadraticSurd spectral_gap_exact(const StepDistribution& p);
/// The same as a double; asserts 0 < rho~ < 1 for q >= 2 and rho~ = 1 for q = 1.
double spectral_gap(const StepDistribution& p);

enum class Provenance { closed_form, solved, straightened, oracle };
std::string to_string(Provenance p);

struct StepCount {
  Weight target;
  std::int64_t count = 0;
  Provenance provenance = Provenance::closed_form;
};

/// K = q_{t_i}^{1/2} q~_{t_nu}^{1/2} for lambda in P++ and the step nu in W0 lambda_i.
/// Throws ConsistencyError if the exponent sum is odd.
std::int64_t interior_count(int q, int i, const Weight& nu);

/// Targets dominant(lambda + nu), nu in W0 lambda_i, sorted.
std::vector<Weight> step_targets(const Weight& lambda, int i);

/// The straightening rule: a step lambda + nu that leaves the chamber is folded
/// back with weight q^{-1} per inversion, giving for every dominant lambda
///   K(lambda, i, mu) = sum_{nu : dom(lambda + nu) = mu} q^{(e_i - <2rho,lambda> + <2rho,mu>)/2 - inv(a(lambda) + nu)}.
std::vector<StepCount> straightened_counts(const Weight& lambda, int i, int q);

class UnsolvedRowError : public Error {
 public:
  UnsolvedRowError(const Weight& lambda, int type, const std::string& what)
      : Error(what), lambda_(lambda), type_(type) {}
  const Weight& lambda() const { return lambda_; }
  int type() const { return type_; }

 private:
  Weight lambda_;
  int type_;
};

enum class SolverMode {
  strict,    // an underdetermined row is an error
  fallback,  // fill open entries from the straightening rule (tagged straightened)
};

/// Rows K(lambda, i, .) for every dominant lambda of level <= window.
class StepCountTable {
 public:
  struct Key {
    Weight lambda;
    int type;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const noexcept { return WeightHash{}(k.lambda) * 31 + k.type; }
  };

  StepCountTable() = default;
  StepCountTable(int rank, int q, int window) : rank_(rank), q_(q), window_(window) {}

  int rank() const { return rank_; }
  int q() const { return q_; }
  int window() const { return window_; }

  bool has_row(const Weight& lambda, int i) const;
  const std::vector<StepCount>& row(const Weight& lambda, int i) const;
  void set_row(const Weight& lambda, int i, std::vector<StepCount> row);
  std::size_t num_rows() const { return rows_.size(); }
  const std::unordered_map<Key, std::vector<StepCount>, KeyHash>& rows() const { return rows_; }
  /// Entries tagged with the given provenance.
  std::size_t count(Provenance p) const;

  /// Row sums, non-negativity and reversibility N_lambda K(lambda,i,mu) = N_mu K(mu,i*,lambda)
  /// wherever both rows are stored.  Throws ConsistencyError.
  void verify() const;

 private:
  int rank_ = 0;
  int q_ = 0;
  int window_ = -1;
  std::unordered_map<Key, std::vector<StepCount>, KeyHash> rows_;
};

/// Builds the table: closed form on P++, the base case at 0, then constraint
/// propagation on the walls.  Rows of level window + 1 take part in the
/// propagation but are not stored.
struct BoundaryRowSolver {
  SolverMode mode = SolverMode::fallback;
  /// Also compare every solved entry against the straightening rule.
  bool cross_check = true;

  StepCountTable solve(int rank, int q, int window) const;
};

StepCountTable solve_step_counts(int rank, int q, int window, SolverMode mode = SolverMode::fallback);

/// Explicit (q+1)-regular tree (r = 1).  Vertices are words over the child
/// alphabet; counts are enumerated from the neighbours of actual vertices.
struct TreeOracle {
  int q = 2;
  int depth = 0;
  /// counts[k] = {K(k, k+1), K(k, k-1)}.
  std::vector<std::array<std::int64_t, 2>> counts;
  /// laws[n][k] = P(|X_n| = k) for the simple walk from the root, by
  /// vertex-level dynamic programming (empty when the tree is too large).
  std::vector<std::vector<double>> laws;
  /// Number of vertices visited when tabulating counts.
  std::int64_t vertices_checked = 0;
};

TreeOracle tree_oracle(int q, int depth, int law_steps = 0);

enum class KernelKind { plain, doob };
std::string to_string(KernelKind k);

/// Dominant weights of level <= window + 1 with a dense numbering.  Rows of a
/// kernel exist for level <= window; level window + 1 is the rim.
class WeightIndex {
 public:
  WeightIndex(int rank, int window);

  int rank() const { return rank_; }
  int window() const { return window_; }
  int size() const { return static_cast<int>(weights_.size()); }
  const Weight& weight(int k) const { return weights_[k]; }
  /// -1 when absent.
  int find(const Weight& lambda) const;
  int at(const Weight& lambda) const;
  bool on_rim(int k) const { return weights_[k].level() > window_; }

 private:
  int rank_;
  int window_;
  std::vector<Weight> weights_;
  std::unordered_map<Weight, int, WeightHash> lookup_;
};

/// Row-stochastic kernel on WeightIndex in compressed row form.
template <class Scalar>
class RadialKernel {
 public:
  RadialKernel() = default;
  RadialKernel(std::shared_ptr<const WeightIndex> index, KernelKind kind)
      : index_(std::move(index)), kind_(kind), row_start_{0} {}

  const WeightIndex& index() const { return *index_; }
  std::shared_ptr<const WeightIndex> index_ptr() const { return index_; }
  KernelKind kind() const { return kind_; }
  int rank() const { return index_->rank(); }
  int window() const { return index_->window(); }
  int q() const { return q_; }
  void set_q(int q) { q_ = q; }

  int row_begin(int k) const { return row_start_[k]; }
  int row_end(int k) const { return row_start_[k + 1]; }
  int col(int e) const { return cols_[e]; }
  const Scalar& value(int e) const { return values_[e]; }
  std::size_t nonzeros() const { return values_.size(); }

  /// p(lambda, mu), zero if absent.
  Scalar operator()(const Weight& lambda, const Weight& mu) const;

  /// Appends the next row (rows come in index order; rim rows are empty).
  void append_row(const std::vector<std::pair<int, Scalar>>& entries);
  int num_rows() const { return static_cast<int>(row_start_.size()) - 1; }

  template <class Other>
  RadialKernel<Other> cast() const;

  /// Row-major sparse matrix (double kernels).
  Eigen::SparseMatrix<double, Eigen::RowMajor> to_sparse() const;

  /// max over rows of |sum - 1|.
  double max_row_defect() const;

 private:
  template <class>
  friend class RadialKernel;

  std::shared_ptr<const WeightIndex> index_;
  KernelKind kind_ = KernelKind::plain;
  int q_ = 0;
  std::vector<int> row_start_;
  std::vector<int> cols_;
  std::vector<Scalar> values_;
};

/// row(lambda)[mu] = sum_i p_i K(lambda, i, mu).  Scalar is QuadraticSurd
/// (exact) or double.  Rows are checked to sum to one.
template <class Scalar>
RadialKernel<Scalar> assemble_kernel(const StepDistribution& p, const StepCountTable& counts);

/// q(lambda, mu) = p(lambda, mu) F0(mu) / F0(lambda) / rho~.  The F0 table must
/// cover window + 1.  Throws ConsistencyError if a row misses 1 by more than 1e-6.
RadialKernel<double> doob_transform(const RadialKernel<double>& kernel, const F0Table& f0, double rho);

/// max_lambda |sum_mu p(lambda,mu) F0(mu) / (rho~ F0(lambda)) - 1|.
double eigenfunction_residual(const RadialKernel<double>& kernel, const F0Table& f0, double rho);

/// Convenience: simple walk counts, plain kernel and (optionally) its Doob
/// transform on one window.
struct KernelBundle {
  StepDistribution step;
  double rho = 0;
  StepCountTable counts;
  RadialKernel<double> plain;
  std::optional<F0Table> f0;
  std::optional<RadialKernel<double>> doob;
};

KernelBundle build_kernels(int rank, int q, int window, bool with_doob, SolverMode mode = SolverMode::fallback);

// ---------------------------------------------------------------------------

template <class Scalar>
Scalar RadialKernel<Scalar>::operator()(const Weight& lambda, const Weight& mu) const {
  const int k = index_->find(lambda);
  const int j = index_->find(mu);
  if (k < 0 || j < 0) return Scalar(0);
  for (int e = row_start_[k]; e < row_start_[k + 1]; ++e)
    if (cols_[e] == j) return values_[e];
  return Scalar(0);
}

template <class Scalar>
void RadialKernel<Scalar>::append_row(const std::vector<std::pair<int, Scalar>>& entries) {
  if (num_rows() >= index_->size()) throw ConsistencyError("RadialKernel: too many rows");
  for (const auto& [j, v] : entries) {
    cols_.push_back(j);
    values_.push_back(v);
  }
  row_start_.push_back(static_cast<int>(values_.size()));
}

template <class Scalar>
template <class Other>
RadialKernel<Other> RadialKernel<Scalar>::cast() const {
  RadialKernel<Other> out;
  out.index_ = index_;
  out.kind_ = kind_;
  out.q_ = q_;
  out.row_start_ = row_start_;
  out.cols_ = cols_;
  out.values_.reserve(values_.size());
  for (const auto& v : values_) {
    if constexpr (std::is_same_v<Other, double>) {
      out.values_.push_back(to_double(v));
    } else {
      out.values_.push_back(Other(v));
    }
  }
  return out;
}

}  // namespace chamberwalk
