#include "chamberwalk/radial_kernel.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>

namespace chamberwalk {

namespace {

int e_index(int rank, int i) { return i * (rank + 1 - i); }

std::int64_t to_int64(const BigInt& v, const char* what) {
  if (v > BigInt(std::numeric_limits<std::int64_t>::max()) || v < BigInt(std::numeric_limits<std::int64_t>::min())) {
    throw DomainError(std::string(what) + ": count does not fit in 64 bits");
  }
  return v.convert_to<std::int64_t>();
}

std::int64_t q_power(int q, std::int64_t e) {
  if (e < 0) throw ConsistencyError("negative power in an integer count");
  return to_int64(ipow(q, static_cast<unsigned>(e)), "q_power");
}

// Calls f(v) for every 0/1 vector v of length rank+1 with i ones, i.e. the
// partition increments of W0 lambda_i.
template <class F>
void for_each_increment(int rank, int i, F&& f) {
  std::vector<int> mask(rank + 1, 0);
  std::fill(mask.end() - i, mask.end(), 1);
  do {
    f(Eigen::Map<const Eigen::VectorXi>(mask.data(), rank + 1));
  } while (std::next_permutation(mask.begin(), mask.end()));
}

Eigen::VectorXi sorted_desc(Eigen::VectorXi b) {
  std::sort(b.data(), b.data() + b.size(), std::greater<>());
  return b;
}

int inversions(const Eigen::VectorXi& b) {
  int inv = 0;
  for (int x = 0; x < b.size(); ++x)
    for (int y = x + 1; y < b.size(); ++y)
      if (b[x] < b[y]) ++inv;
  return inv;
}

std::vector<std::int64_t> fundamental_sizes(int rank, int q) {
  std::vector<std::int64_t> n(rank + 1, 0);
  for (int i = 1; i <= rank; ++i) n[i] = to_int64(n_lambda(Weight::fundamental(rank, i), q), "N_lambda_i");
  return n;
}

}  // namespace

// ---------------------------------------------------------------------------
// step distributions

bool StepDistribution::symmetric() const {
  for (int i = 1; i <= rank; ++i)
    if (!(p[i - 1] == p[rank - i])) return false;
  return true;
}

void StepDistribution::validate() const {
  if (rank < 1 || q < 1) throw DomainError("StepDistribution: bad rank or q");
  if (static_cast<int>(p.size()) != rank) throw DomainError("StepDistribution: need one probability per type");
  QuadraticSurd total(q);
  for (int i = 1; i <= rank; ++i) {
    if (!(p[i - 1].to_double() > 0)) throw DomainError("StepDistribution: p_" + std::to_string(i) + " must be positive");
    total += p[i - 1] * QuadraticSurd(q, Rational(n_lambda(Weight::fundamental(rank, i), q)));
  }
  if (!(total == QuadraticSurd(q, 1))) {
    throw DomainError("StepDistribution: sum_i p_i N_lambda_i = " + total.str() + ", not 1");
  }
}

StepDistribution simple_rw_params(int rank, int q) {
  if (rank < 1 || q < 1) throw DomainError("simple_rw_params: need rank >= 1 and q >= 1");
  StepDistribution d{rank, q, {}};
  QuadraticSurd s(q);
  std::vector<QuadraticSurd> raw;
  for (int i = 1; i <= rank; ++i) {
    raw.push_back(QuadraticSurd::half_power(q, -e_index(rank, i)));
    s += raw.back() * QuadraticSurd(q, Rational(n_lambda(Weight::fundamental(rank, i), q)));
  }
  for (auto& v : raw) d.p.push_back(v / s);
  d.validate();
  return d;
}

StepDistribution step_distribution_from_weights(int rank, int q, const std::vector<Rational>& weights) {
  if (static_cast<int>(weights.size()) != rank) throw DomainError("step weights: need one weight per type");
  Rational s = 0;
  for (int i = 1; i <= rank; ++i) s += weights[i - 1] * Rational(n_lambda(Weight::fundamental(rank, i), q));
  if (s <= 0) throw DomainError("step weights: must be positive");
  StepDistribution d{rank, q, {}};
  for (const auto& w : weights) d.p.emplace_back(q, w / s);
  d.validate();
  return d;
}

QuadraticSurd spectral_gap_exact(const StepDistribution& p) {
  QuadraticSurd rho(p.q);
  BigInt binom = 1;
  for (int i = 1; i <= p.rank; ++i) {
    binom = binom * (p.rank + 2 - i) / i;
    rho += p.p[i - 1] * QuadraticSurd::half_power(p.q, e_index(p.rank, i)) * QuadraticSurd(p.q, Rational(binom));
  }
  return rho;
}

double spectral_gap(const StepDistribution& p) {
  const QuadraticSurd exact = spectral_gap_exact(p);
  const double rho = exact.to_double();
  if (p.q == 1) {
    if (!(exact == QuadraticSurd(1, 1))) throw ConsistencyError("spectral_gap: flat walk must have rho = 1");
  } else if (!(rho > 0 && rho < 1)) {
    throw ConsistencyError("spectral_gap: rho = " + exact.str() + " outside (0, 1)");
  }
  return rho;
}

std::string to_string(Provenance p) {
  switch (p) {
    case Provenance::closed_form: return "closed_form";
    case Provenance::solved: return "solved";
    case Provenance::straightened: return "straightened";
    case Provenance::oracle: return "oracle";
  }
  return "?";
}

std::string to_string(KernelKind k) { return k == KernelKind::plain ? "plain" : "doob"; }

// ---------------------------------------------------------------------------
// counts

std::int64_t interior_count(int q, int i, const Weight& nu) {
  const std::int64_t e2 = e_index(nu.rank(), i) + two_rho_pairing(nu);
  if (e2 % 2 != 0) throw ConsistencyError("interior_count: odd exponent sum for " + to_string(nu));
  return q_power(q, e2 / 2);
}

std::vector<Weight> step_targets(const Weight& lambda, int i) {
  const Eigen::VectorXi a = lambda.partition();
  std::vector<Weight> out;
  for_each_increment(lambda.rank(), i, [&](const auto& v) {
    out.push_back(Weight::from_partition(sorted_desc(a + v)));
  });
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

std::vector<StepCount> straightened_counts(const Weight& lambda, int i, int q) {
  if (!lambda.is_dominant()) throw DomainError("straightened_counts: lambda must be dominant");
  const int r = lambda.rank();
  const Eigen::VectorXi a = lambda.partition();
  const std::int64_t base = e_index(r, i) - two_rho_pairing(lambda);
  std::map<Weight, std::int64_t> acc;
  for_each_increment(r, i, [&](const auto& v) {
    const Eigen::VectorXi b = a + v;
    const Weight mu = Weight::from_partition(sorted_desc(b));
    const std::int64_t e2 = base + two_rho_pairing(mu);
    if (e2 % 2 != 0) throw ConsistencyError("straightened_counts: odd exponent");
    acc[mu] += q_power(q, e2 / 2 - inversions(b));
  });
  std::vector<StepCount> row;
  for (const auto& [mu, k] : acc) row.push_back({mu, k, Provenance::straightened});
  return row;
}

bool StepCountTable::has_row(const Weight& lambda, int i) const { return rows_.count(Key{lambda, i}) != 0; }

const std::vector<StepCount>& StepCountTable::row(const Weight& lambda, int i) const {
  auto it = rows_.find(Key{lambda, i});
  if (it == rows_.end()) {
    throw DomainError("StepCountTable: no row for " + to_string(lambda) + ", type " + std::to_string(i));
  }
  return it->second;
}

void StepCountTable::set_row(const Weight& lambda, int i, std::vector<StepCount> row) {
  rows_[Key{lambda, i}] = std::move(row);
}

std::size_t StepCountTable::count(Provenance p) const {
  std::size_t n = 0;
  for (const auto& [key, row] : rows_)
    for (const auto& e : row)
      if (e.provenance == p) ++n;
  return n;
}

void StepCountTable::verify() const {
  const auto sizes = fundamental_sizes(rank_, q_);
  for (const auto& [key, row] : rows_) {
    std::int64_t sum = 0;
    for (const auto& e : row) {
      if (e.count < 0) throw ConsistencyError("StepCountTable: negative count at " + to_string(key.lambda));
      sum += e.count;
    }
    if (sum != sizes[key.type]) {
      throw ConsistencyError("StepCountTable: row " + to_string(key.lambda) + ", type " + std::to_string(key.type) +
                             " sums to " + std::to_string(sum));
    }
    const int dual = rank_ + 1 - key.type;
    for (const auto& e : row) {
      auto back = rows_.find(Key{e.target, dual});
      if (back == rows_.end()) continue;
      std::int64_t k_back = -1;
      for (const auto& b : back->second)
        if (b.target == key.lambda) k_back = b.count;
      if (k_back < 0 || sphere_ratio(e.target, key.lambda, q_) * Rational(k_back) != Rational(e.count)) {
        throw ConsistencyError("StepCountTable: reversibility fails between " + to_string(key.lambda) + " and " +
                               to_string(e.target));
      }
    }
  }
}

namespace {

struct OpenRow {
  Weight lambda;
  int type = 0;
  std::vector<Weight> targets;
  std::vector<std::optional<std::int64_t>> counts;
  std::vector<Provenance> provenance;

  int unknown() const {
    return static_cast<int>(std::count_if(counts.begin(), counts.end(), [](const auto& c) { return !c; }));
  }
  std::optional<std::int64_t> lookup(const Weight& mu) const {
    for (std::size_t t = 0; t < targets.size(); ++t)
      if (targets[t] == mu) return counts[t];
    return std::nullopt;
  }
};

}  // namespace

StepCountTable BoundaryRowSolver::solve(int rank, int q, int window) const {
  if (rank < 1 || q < 1 || window < 0) throw DomainError("BoundaryRowSolver: bad arguments");
  const auto sizes = fundamental_sizes(rank, q);
  const auto weights = dominant_weights(rank, window + 1);

  std::vector<OpenRow> rows;
  std::unordered_map<StepCountTable::Key, std::size_t, StepCountTable::KeyHash> where;
  for (const auto& lambda : weights) {
    for (int i = 1; i <= rank; ++i) {
      OpenRow row{lambda, i, step_targets(lambda, i), {}, {}};
      row.counts.resize(row.targets.size());
      row.provenance.assign(row.targets.size(), Provenance::solved);
      if (lambda.is_regular()) {
        for (std::size_t t = 0; t < row.targets.size(); ++t) {
          row.counts[t] = interior_count(q, i, row.targets[t] - lambda);
          row.provenance[t] = Provenance::closed_form;
        }
      } else if (lambda.level() == 0) {
        row.counts[0] = sizes[i];
        row.provenance[0] = Provenance::closed_form;
      }
      where.emplace(StepCountTable::Key{lambda, i}, rows.size());
      rows.push_back(std::move(row));
    }
  }

  // Propagation, in order of increasing level, until nothing moves.
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto& row : rows) {
      if (row.unknown() == 0) continue;
      const int dual = rank + 1 - row.type;
      for (std::size_t t = 0; t < row.targets.size(); ++t) {
        if (row.counts[t]) continue;
        auto it = where.find(StepCountTable::Key{row.targets[t], dual});
        if (it == where.end()) continue;
        const auto back = rows[it->second].lookup(row.lambda);
        if (!back) continue;
        const Rational k = sphere_ratio(row.targets[t], row.lambda, q) * Rational(*back);
        if (mp::denominator(k) != 1 || k < 0) {
          throw ConsistencyError("BoundaryRowSolver: reversibility forces a non-integer count at " +
                                 to_string(row.lambda));
        }
        row.counts[t] = mp::numerator(k).convert_to<std::int64_t>();
        changed = true;
      }
      if (row.unknown() == 1) {
        std::int64_t sum = 0;
        std::size_t open = 0;
        for (std::size_t t = 0; t < row.targets.size(); ++t) {
          if (row.counts[t]) {
            sum += *row.counts[t];
          } else {
            open = t;
          }
        }
        if (sum > sizes[row.type]) {
          throw ConsistencyError("BoundaryRowSolver: row sum exceeded at " + to_string(row.lambda));
        }
        row.counts[open] = sizes[row.type] - sum;
        changed = true;
      }
    }
  }

  StepCountTable table(rank, q, window);
  for (auto& row : rows) {
    if (row.lambda.level() > window) continue;
    std::vector<StepCount> reference;
    if (row.unknown() > 0 || cross_check) reference = straightened_counts(row.lambda, row.type, q);
    if (row.unknown() > 0) {
      if (mode == SolverMode::strict) {
        std::ostringstream os;
        os << "unsolved row: lambda = " << to_string(row.lambda) << ", type " << row.type << "; open targets:";
        for (std::size_t t = 0; t < row.targets.size(); ++t)
          if (!row.counts[t]) os << ' ' << to_string(row.targets[t]);
        throw UnsolvedRowError(row.lambda, row.type, os.str());
      }
    }
    std::vector<StepCount> out;
    for (std::size_t t = 0; t < row.targets.size(); ++t) {
      std::int64_t ref = -1;
      for (const auto& e : reference)
        if (e.target == row.targets[t]) ref = e.count;
      if (!row.counts[t]) {
        out.push_back({row.targets[t], ref, Provenance::straightened});
        continue;
      }
      if (cross_check && ref != *row.counts[t]) {
        throw ConsistencyError("BoundaryRowSolver: solved count " + std::to_string(*row.counts[t]) + " at " +
                               to_string(row.lambda) + " -> " + to_string(row.targets[t]) +
                               " disagrees with straightening (" + std::to_string(ref) + ")");
      }
      out.push_back({row.targets[t], *row.counts[t], row.provenance[t]});
    }
    table.set_row(row.lambda, row.type, std::move(out));
  }
  table.verify();
  return table;
}

StepCountTable solve_step_counts(int rank, int q, int window, SolverMode mode) {
  return BoundaryRowSolver{mode, true}.solve(rank, q, window);
}

// ---------------------------------------------------------------------------
// tree oracle

namespace {

using Word = std::vector<int>;

std::vector<Word> tree_neighbours(const Word& x, int q) {
  std::vector<Word> out;
  if (!x.empty()) out.emplace_back(x.begin(), x.end() - 1);
  const int children = x.empty() ? q + 1 : q;
  for (int c = 0; c < children; ++c) {
    Word y = x;
    y.push_back(c);
    out.push_back(std::move(y));
  }
  return out;
}

}  // namespace

TreeOracle tree_oracle(int q, int depth, int law_steps) {
  if (q < 1 || depth < 0) throw DomainError("tree_oracle: bad arguments");
  TreeOracle oracle{q, depth, {}, {}, 0};
  constexpr std::int64_t kFullEnumeration = 20000;
  constexpr int kSample = 2000;
  std::mt19937_64 gen(0x7ee5ULL + static_cast<std::uint64_t>(q));

  for (int k = 0; k <= depth; ++k) {
    // vertices at depth k: all of them when few, otherwise a sample
    std::vector<Word> layer;
    const double size = k == 0 ? 1.0 : (q + 1.0) * std::pow(q, k - 1);
    if (size <= kFullEnumeration) {
      layer.push_back({});
      for (int d = 0; d < k; ++d) {
        std::vector<Word> next;
        for (const auto& x : layer) {
          const int children = x.empty() ? q + 1 : q;
          for (int c = 0; c < children; ++c) {
            Word y = x;
            y.push_back(c);
            next.push_back(std::move(y));
          }
        }
        layer = std::move(next);
      }
    } else {
      for (int s = 0; s < kSample; ++s) {
        Word x;
        for (int d = 0; d < k; ++d) x.push_back(static_cast<int>(gen() % static_cast<std::uint64_t>(d == 0 ? q + 1 : q)));
        layer.push_back(std::move(x));
      }
    }
    std::array<std::int64_t, 2> counts{-1, -1};
    for (const auto& x : layer) {
      std::array<std::int64_t, 2> c{0, 0};
      for (const auto& y : tree_neighbours(x, q)) {
        if (static_cast<int>(y.size()) == k + 1) ++c[0];
        if (static_cast<int>(y.size()) == k - 1) ++c[1];
      }
      if (counts[0] < 0) counts = c;
      if (c != counts) throw ConsistencyError("tree_oracle: vertices at the same depth disagree");
      ++oracle.vertices_checked;
    }
    oracle.counts.push_back(counts);
  }

  if (law_steps > 0) {
    double total = 1;
    for (int d = 1; d <= law_steps; ++d) total += (q + 1.0) * std::pow(q, d - 1);
    if (total <= 4e6) {
      // explicit tree to depth law_steps: parent links and depth per vertex
      std::vector<int> parent{-1};
      std::vector<int> level{0};
      std::vector<std::vector<int>> children(1);
      for (std::size_t v = 0; v < parent.size(); ++v) {
        if (level[v] == law_steps) continue;
        const int count = v == 0 ? q + 1 : q;
        for (int c = 0; c < count; ++c) {
          const int id = static_cast<int>(parent.size());
          parent.push_back(static_cast<int>(v));
          level.push_back(level[v] + 1);
          children.emplace_back();
          children[v].push_back(id);
        }
      }
      std::vector<double> prob(parent.size(), 0.0);
      prob[0] = 1.0;
      const double step = 1.0 / (q + 1);
      for (int n = 0; n <= law_steps; ++n) {
        std::vector<double> law(law_steps + 1, 0.0);
        for (std::size_t v = 0; v < prob.size(); ++v) law[level[v]] += prob[v];
        oracle.laws.push_back(std::move(law));
        if (n == law_steps) break;
        std::vector<double> next(prob.size(), 0.0);
        for (std::size_t v = 0; v < prob.size(); ++v) {
          if (prob[v] == 0) continue;
          if (parent[v] >= 0) next[parent[v]] += prob[v] * step;
          for (int c : children[v]) next[c] += prob[v] * step;
        }
        prob = std::move(next);
      }
    }
  }
  return oracle;
}

// ---------------------------------------------------------------------------
// kernels

WeightIndex::WeightIndex(int rank, int window) : rank_(rank), window_(window), weights_(dominant_weights(rank, window + 1)) {
  lookup_.reserve(weights_.size());
  for (std::size_t k = 0; k < weights_.size(); ++k) lookup_.emplace(weights_[k], static_cast<int>(k));
}

int WeightIndex::find(const Weight& lambda) const {
  auto it = lookup_.find(lambda);
  return it == lookup_.end() ? -1 : it->second;
}

int WeightIndex::at(const Weight& lambda) const {
  const int k = find(lambda);
  if (k < 0) throw DomainError("WeightIndex: " + to_string(lambda) + " outside the window");
  return k;
}

template <class Scalar>
Eigen::SparseMatrix<double, Eigen::RowMajor> RadialKernel<Scalar>::to_sparse() const {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(values_.size());
  for (int k = 0; k < num_rows(); ++k)
    for (int e = row_start_[k]; e < row_start_[k + 1]; ++e) triplets.emplace_back(k, cols_[e], to_double(values_[e]));
  Eigen::SparseMatrix<double, Eigen::RowMajor> m(index_->size(), index_->size());
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

template <class Scalar>
double RadialKernel<Scalar>::max_row_defect() const {
  double worst = 0;
  for (int k = 0; k < num_rows(); ++k) {
    if (index_->on_rim(k)) continue;
    double s = 0;
    for (int e = row_start_[k]; e < row_start_[k + 1]; ++e) s += to_double(values_[e]);
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

template class RadialKernel<double>;
template class RadialKernel<QuadraticSurd>;

namespace {

template <class Scalar>
Scalar weighted_count(const QuadraticSurd& p, std::int64_t k, int q) {
  if constexpr (std::is_same_v<Scalar, double>) {
    return p.to_double() * static_cast<double>(k);
  } else {
    return p * QuadraticSurd(q, Rational(k));
  }
}

}  // namespace

template <class Scalar>
RadialKernel<Scalar> assemble_kernel(const StepDistribution& p, const StepCountTable& counts) {
  if (p.rank != counts.rank() || p.q != counts.q()) throw DomainError("assemble_kernel: rank or q mismatch");
  auto index = std::make_shared<const WeightIndex>(counts.rank(), counts.window());
  RadialKernel<Scalar> kernel(index, KernelKind::plain);
  kernel.set_q(p.q);
  for (int k = 0; k < index->size(); ++k) {
    if (index->on_rim(k)) {
      kernel.append_row({});
      continue;
    }
    const Weight& lambda = index->weight(k);
    std::map<int, Scalar> acc;
    for (int i = 1; i <= p.rank; ++i) {
      for (const auto& e : counts.row(lambda, i)) {
        const int j = index->at(e.target);
        auto it = acc.find(j);
        const Scalar v = weighted_count<Scalar>(p.p[i - 1], e.count, p.q);
        if (it == acc.end()) {
          acc.emplace(j, v);
        } else {
          it->second = it->second + v;
        }
      }
    }
    std::vector<std::pair<int, Scalar>> row(acc.begin(), acc.end());
    Scalar sum(0);
    for (const auto& [j, v] : row) sum = sum + v;
    if constexpr (std::is_same_v<Scalar, double>) {
      if (std::abs(sum - 1.0) > 1e-12) throw ConsistencyError("assemble_kernel: row " + to_string(lambda) + " not stochastic");
    } else {
      if (!(sum == QuadraticSurd(p.q, 1))) {
        throw ConsistencyError("assemble_kernel: row " + to_string(lambda) + " sums to " + sum.str());
      }
    }
    kernel.append_row(row);
  }
  return kernel;
}

template RadialKernel<double> assemble_kernel<double>(const StepDistribution&, const StepCountTable&);
template RadialKernel<QuadraticSurd> assemble_kernel<QuadraticSurd>(const StepDistribution&, const StepCountTable&);

namespace {

double doob_row(const RadialKernel<double>& kernel, const F0Table& f0, double rho, int k,
                std::vector<std::pair<int, double>>* out) {
  const auto& index = kernel.index();
  const Weight& lambda = index.weight(k);
  double sum = 0;
  for (int e = kernel.row_begin(k); e < kernel.row_end(k); ++e) {
    const Weight& mu = index.weight(kernel.col(e));
    if (!f0.contains(mu)) throw DomainError("doob_transform: F0 table does not cover " + to_string(mu));
    const double v = kernel.value(e) * f0.ratio(mu, lambda) / rho;
    sum += v;
    if (out) out->emplace_back(kernel.col(e), v);
  }
  return sum;
}

}  // namespace

RadialKernel<double> doob_transform(const RadialKernel<double>& kernel, const F0Table& f0, double rho) {
  if (kernel.kind() != KernelKind::plain) throw DomainError("doob_transform: kernel is already a Doob kernel");
  if (f0.window() < kernel.window() + 1) throw DomainError("doob_transform: F0 table must cover window + 1");
  RadialKernel<double> out(kernel.index_ptr(), KernelKind::doob);
  out.set_q(kernel.q());
  const auto& index = kernel.index();
  for (int k = 0; k < index.size(); ++k) {
    if (index.on_rim(k)) {
      out.append_row({});
      continue;
    }
    std::vector<std::pair<int, double>> row;
    const double sum = doob_row(kernel, f0, rho, k, &row);
    if (std::abs(sum - 1.0) > 1e-6) {
      throw ConsistencyError("doob_transform: row " + to_string(index.weight(k)) + " sums to " + std::to_string(sum));
    }
    out.append_row(row);
  }
  return out;
}

double eigenfunction_residual(const RadialKernel<double>& kernel, const F0Table& f0, double rho) {
  double worst = 0;
  for (int k = 0; k < kernel.index().size(); ++k) {
    if (kernel.index().on_rim(k)) continue;
    worst = std::max(worst, std::abs(doob_row(kernel, f0, rho, k, nullptr) - 1.0));
  }
  return worst;
}

KernelBundle build_kernels(int rank, int q, int window, bool with_doob, SolverMode mode) {
  KernelBundle b;
  b.step = simple_rw_params(rank, q);
  b.rho = spectral_gap(b.step);
  b.counts = solve_step_counts(rank, q, window, mode);
  b.plain = assemble_kernel<double>(b.step, b.counts);
  if (with_doob) {
    b.f0.emplace(rank, q, window + 1);
    b.doob = doob_transform(b.plain, *b.f0, b.rho);
  }
  return b;
}

}  // namespace chamberwalk
