#include "chamberwalk/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

namespace chamberwalk {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// configuration

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError("config: " + m); };
  if (rank < 1 || rank > 4) fail("rank must be in [1, 4]");
  if (q < 2) fail("q must be >= 2");
  if (n_schedule.empty()) fail("n_schedule is empty");
  for (int n : n_schedule)
    if (n < 1) fail("N must be >= 1");
  if (t_list.empty()) fail("t_list is empty");
  for (double t : t_list)
    if (!(t > 0)) fail("t must be > 0");
  if (!start.empty() && static_cast<int>(start.size()) != rank) fail("start needs rank coordinates");
  if (!deep_start.empty() && static_cast<int>(deep_start.size()) != rank) fail("deep_start needs rank coordinates");
  for (double v : start)
    if (v < 0) fail("start must lie in the closed chamber");
  if (window < 0) fail("window must be >= 0");
  for (double tol : {tv_tolerance, pointwise_tolerance, bin_width, leak_tolerance, tail_sigmas, bridge_tolerance,
                     dt, energy_level, drift_tolerance, covariance_tolerance, tightness_epsilon, deep_t})
    if (!(tol > 0)) fail("tolerances and scales must be > 0");
  if (interior_margin < 0 || density_floor < 0) fail("grid margins must be >= 0");
  if (!(rate_min < rate_max)) fail("rate_min must be < rate_max");
  if (bridge_max_n < 0) fail("bridge_max_n must be >= 0");
  if (n_paths < 1) fail("n_paths must be >= 1");
  if (energy_samples < 2) fail("energy_samples must be >= 2");
  if (eta_list.empty() || alpha_list.empty()) fail("eta_list and alpha_list must be non-empty");
}

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["rank"] = c.rank;
  j["q"] = c.q;
  j["kernel"] = to_string(c.kernel);
  j["n_schedule"] = c.n_schedule;
  j["t_list"] = c.t_list;
  j["start"] = c.start;
  j["n_paths"] = c.n_paths;
  j["seed"] = c.seed;
  j["window"] = c.window;
  j["tv_tolerance"] = c.tv_tolerance;
  j["pointwise_tolerance"] = c.pointwise_tolerance;
  j["bin_width"] = c.bin_width;
  j["interior_margin"] = c.interior_margin;
  j["density_floor"] = c.density_floor;
  j["leak_tolerance"] = c.leak_tolerance;
  j["tail_sigmas"] = c.tail_sigmas;
  j["bridge_max_n"] = c.bridge_max_n;
  j["bridge_tolerance"] = c.bridge_tolerance;
  j["rate_min"] = c.rate_min;
  j["rate_max"] = c.rate_max;
  j["dt"] = c.dt;
  j["energy_samples"] = c.energy_samples;
  j["energy_permutations"] = c.energy_permutations;
  j["energy_level"] = c.energy_level;
  j["drift_tolerance"] = c.drift_tolerance;
  j["covariance_tolerance"] = c.covariance_tolerance;
  j["deep_start"] = c.deep_start;
  j["deep_t"] = c.deep_t;
  j["eta_list"] = c.eta_list;
  j["alpha_list"] = c.alpha_list;
  j["tightness_eta"] = c.tightness_eta;
  j["tightness_alpha"] = c.tightness_alpha;
  j["tightness_epsilon"] = c.tightness_epsilon;
  j["output_dir"] = c.output_dir;
  j["write_paths"] = c.write_paths;
  return j;
}

namespace {

template <class T>
void read(const Json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

KernelKind parse_kernel(const std::string& s) {
  if (s == "doob") return KernelKind::doob;
  if (s == "plain") return KernelKind::plain;
  throw ConfigError("config: kernel must be 'doob' or 'plain', got '" + s + "'");
}

}  // namespace

ExperimentConfig config_from_json(const Json& j) {
  if (!j.is_object()) throw ConfigError("config: expected a JSON object");
  ExperimentConfig c;
  const Json known = to_json(c);
  for (const auto& [key, value] : j.items())
    if (!known.contains(key) && key != "experiment") throw ConfigError("config: unknown key '" + key + "'");
  read(j, "rank", c.rank);
  read(j, "q", c.q);
  if (j.contains("kernel")) {
    std::string k;
    read(j, "kernel", k);
    c.kernel = parse_kernel(k);
  }
  read(j, "n_schedule", c.n_schedule);
  read(j, "t_list", c.t_list);
  read(j, "start", c.start);
  read(j, "n_paths", c.n_paths);
  read(j, "seed", c.seed);
  read(j, "window", c.window);
  read(j, "tv_tolerance", c.tv_tolerance);
  read(j, "pointwise_tolerance", c.pointwise_tolerance);
  read(j, "bin_width", c.bin_width);
  read(j, "interior_margin", c.interior_margin);
  read(j, "density_floor", c.density_floor);
  read(j, "leak_tolerance", c.leak_tolerance);
  read(j, "tail_sigmas", c.tail_sigmas);
  read(j, "bridge_max_n", c.bridge_max_n);
  read(j, "bridge_tolerance", c.bridge_tolerance);
  read(j, "rate_min", c.rate_min);
  read(j, "rate_max", c.rate_max);
  read(j, "dt", c.dt);
  read(j, "energy_samples", c.energy_samples);
  read(j, "energy_permutations", c.energy_permutations);
  read(j, "energy_level", c.energy_level);
  read(j, "drift_tolerance", c.drift_tolerance);
  read(j, "covariance_tolerance", c.covariance_tolerance);
  read(j, "deep_start", c.deep_start);
  read(j, "deep_t", c.deep_t);
  read(j, "eta_list", c.eta_list);
  read(j, "alpha_list", c.alpha_list);
  read(j, "tightness_eta", c.tightness_eta);
  read(j, "tightness_alpha", c.tightness_alpha);
  read(j, "tightness_epsilon", c.tightness_epsilon);
  read(j, "output_dir", c.output_dir);
  read(j, "write_paths", c.write_paths);
  c.validate();
  return c;
}

void apply_override(Json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override must look like key=value: '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);
  Json parsed = Json::parse(value, nullptr, false);
  j[key] = parsed.is_discarded() ? Json(value) : parsed;
}

ExperimentConfig load_config(const fs::path& path, const std::vector<std::string>& overrides) {
  Json j = Json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config " + path.string());
    j = Json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config " + path.string() + " is not valid JSON");
  }
  for (const auto& o : overrides) apply_override(j, o);
  return config_from_json(j);
}

// ---------------------------------------------------------------------------
// reports and files

bool ExperimentReport::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

Json environment_metadata() {
  Json j;
  j["library"] = "chamberwalk";
  j["version"] = CHAMBERWALK_VERSION;
#ifdef __VERSION__
  j["compiler"] = __VERSION__;
#endif
  j["cxx_standard"] = static_cast<long>(__cplusplus);
  j["rng"] = "mt19937_64 per path, seeded with splitmix64(seed ^ path_index)";
  j["float_format"] = "%.17g";
  return j;
}

Json ExperimentReport::to_json() const {
  Json j;
  j["experiment"] = experiment;
  j["passed"] = passed();
  j["seed"] = config.seed;
  j["environment"] = environment_metadata();
  j["config"] = chamberwalk::to_json(config);
  Json cs = Json::array();
  for (const auto& c : checks) {
    Json e;
    e["name"] = c.name;
    e["passed"] = c.passed;
    e["value"] = c.value;
    e["threshold"] = c.threshold;
    if (!c.detail.empty()) e["detail"] = c.detail;
    cs.push_back(e);
  }
  j["checks"] = cs;
  j["runs"] = runs;
  j["extra"] = extra;
  Json names = Json::array();
  for (const auto& [name, body] : files) names.push_back(name);
  j["files"] = names;
  return j;
}

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string csv_metadata(int rank, int q, KernelKind kernel, int window, std::uint64_t seed) {
  std::ostringstream os;
  os << "# rank: " << rank << "\n# q: " << q << "\n# kernel: " << to_string(kernel) << "\n# window: " << window
     << "\n# seed: " << seed << "\n";
  return os.str();
}

void write_atomic(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw Error("write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

void write_report(const ExperimentReport& report) {
  const fs::path dir(report.config.output_dir);
  for (const auto& [name, body] : report.files) write_atomic(dir / name, body);
  write_atomic(dir / "report.json", report.to_json().dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// shared pieces

namespace {

void add_check(ExperimentReport& r, std::string name, bool passed, double value, double threshold,
               std::string detail = {}) {
  r.checks.push_back({std::move(name), passed, value, threshold, std::move(detail)});
}

int weight_class(const Weight& w) {
  long s = 0;
  for (int k = 0; k < w.rank(); ++k) s += static_cast<long>(k + 1) * w[k];
  return static_cast<int>(s % (w.rank() + 1));
}

std::string weight_columns(int rank, const std::string& prefix = "m") {
  std::string s;
  for (int k = 1; k <= rank; ++k) s += (k > 1 ? "," : "") + prefix + std::to_string(k);
  return s;
}

std::string weight_cells(const Weight& w) {
  std::string s;
  for (int k = 0; k < w.rank(); ++k) s += (k > 0 ? "," : "") + std::to_string(w[k]);
  return s;
}

struct Kernels {
  std::shared_ptr<const WeightIndex> index;
  RadialKernel<double> kernel;
  double rho = 0;
};

Kernels build(int rank, int q, int window, KernelKind kind) {
  KernelBundle b = build_kernels(rank, q, window, kind == KernelKind::doob);
  Kernels k;
  k.rho = b.rho;
  k.kernel = kind == KernelKind::doob ? std::move(*b.doob) : std::move(b.plain);
  k.index = k.kernel.index_ptr();
  return k;
}

// Runs over a tensor grid of non-negative integer tuples with bounded sum.
template <class F>
void for_each_tuple(int dims, int max_sum, F&& f) {
  std::vector<int> b(dims, 0);
  while (true) {
    f(b);
    int d = 0;
    while (d < dims) {
      ++b[d];
      int s = 0;
      for (int v : b) s += v;
      if (s <= max_sum) break;
      b[d] = 0;
      ++d;
    }
    if (d == dims) return;
  }
}

}  // namespace

AmbientVector<double> start_point(int rank, const std::vector<double>& fundamental_coords) {
  AmbientVector<double> a = AmbientVector<double>::Zero(rank + 1);
  if (fundamental_coords.empty()) return a;
  const AmbientMatrix<double> lam = fundamental_weights(rank);
  for (int k = 0; k < rank; ++k) a += fundamental_coords[k] * lam.col(k);
  return a;
}

int auto_window(const ExperimentConfig& cfg, int steps, int start_level) {
  if (cfg.window > 0) return cfg.window;
  const int reach = start_level + steps;
  const double c = norm_constant_double(cfg.rank);
  const double dof = cfg.rank * (cfg.rank + 2);
  // level = a_1 - a_{r+1} <= sqrt(2) |x|
  const double spread = std::numbers::sqrt2 * std::sqrt(c * steps) * (std::sqrt(dof) + cfg.tail_sigmas);
  const int diffusive = start_level + static_cast<int>(std::ceil(spread)) + 2;
  return std::max(1, std::min(reach, diffusive));
}

// ---------------------------------------------------------------------------
// limit check

LimitComparison compare_with_density(const LawOnCone<double>& law, const IbmParams& ibm, int big_n, double t,
                                     const ExperimentConfig& cfg) {
  const int r = ibm.rank;
  const WeightIndex& index = *law.index;
  LimitComparison out;
  out.big_n = big_n;
  out.steps = law.step;
  out.t = t;
  out.escaped = law.escaped;

  std::vector<double> class_mass(r + 1, 0.0);
  for (int k = 0; k < index.size(); ++k) class_mass[weight_class(index.weight(k))] += law.mass[k];

  const double root_n = std::sqrt(static_cast<double>(big_n));
  const double covol_q = std::sqrt(r + 1.0);
  const double scale = std::pow(root_n, r) / covol_q;
  const double sqrt_ct = std::sqrt(ibm.c * t);

  struct Row {
    int k;
    double density, rescaled;
  };
  std::vector<Row> rows;
  double max_density = 0;
  for (int k = 0; k < index.size(); ++k) {
    if (law.mass[k] == 0.0) continue;
    const Weight& w = index.weight(k);
    const double dens = ibm_density(ibm, t, scaled_point(w, big_n));
    const double rescaled = law.mass[k] * scale / class_mass[weight_class(w)];
    rows.push_back({k, dens, rescaled});
    max_density = std::max(max_density, dens);
  }

  std::ostringstream csv;
  csv << csv_metadata(r, cfg.q, law.kind, index.window(), cfg.seed);
  csv << "# N: " << big_n << "\n# t: " << format_double(t) << "\n# steps: " << law.step << "\n";
  csv << weight_columns(r) << ",mass,rescaled_density,ibm_density,rel_err\n";
  const double delta_q = (cfg.q + 1.0) / (cfg.q - 1.0);
  const AmbientVector<double> shift = fundamental_weights<double>(r).rowwise().sum() * (delta_q / root_n);
  double shifted_abs = 0, predicted_total = 0;
  for (const Row& row : rows) {
    const Weight& w = index.weight(row.k);
    const double rel = row.density > 0 ? row.rescaled / row.density - 1.0 : std::nan("");
    csv << weight_cells(w) << ',' << format_double(law.mass[row.k]) << ',' << format_double(row.rescaled) << ','
        << format_double(row.density) << ',' << format_double(rel) << '\n';
    const AmbientVector<double> u = scaled_point(w, big_n);
    const AmbientVector<double> us = u + shift;
    const double dens_s = ibm_density(ibm, t, us);
    const double predicted = dens_s * class_mass[weight_class(w)] / scale;
    shifted_abs += std::abs(law.mass[row.k] - predicted);
    predicted_total += predicted;
    if (wall_distance(u) >= cfg.interior_margin * sqrt_ct && row.density >= cfg.density_floor * max_density) {
      ++out.grid_points;
      out.sup_rel_err = std::max(out.sup_rel_err, std::abs(rel));
      out.sup_rel_err_shifted = std::max(out.sup_rel_err_shifted, std::abs(row.rescaled / dens_s - 1.0));
    }
  }
  out.tv_shifted = 0.5 * (shifted_abs + law.escaped + std::abs(1.0 - law.escaped - predicted_total));
  out.csv = csv.str();

  // binned total variation; bins are boxes of B lattice steps per fundamental
  // coordinate, with B a multiple of r + 1 so every box holds each class of P/Q equally
  const int units = std::max(1, static_cast<int>(std::lround(cfg.bin_width * root_n / (r + 1))));
  const int bin = (r + 1) * units;
  out.bin_size = bin;
  std::map<std::vector<int>, double> law_bins;
  for (int k = 0; k < index.size(); ++k) {
    if (law.mass[k] == 0.0) continue;
    const Weight& w = index.weight(k);
    std::vector<int> key(r);
    for (int d = 0; d < r; ++d) key[d] = w[d] / bin;
    law_bins[key] += law.mass[k];
  }
  const auto [gy, gw] = gauss_legendre(4);
  const AmbientMatrix<double> lam = fundamental_weights(r);
  const double jac = std::pow(root_n, -r) / std::sqrt(r + 1.0);
  double sum_abs = 0;
  double density_mass = 0;
  for_each_tuple(r, index.window() / bin + 1, [&](const std::vector<int>& b) {
    double integral = 0;
    std::vector<int> node(r, 0);
    std::vector<double> lo(r), hi(r);
    for (int d = 0; d < r; ++d) {
      lo[d] = b[d] == 0 ? 0.0 : b[d] * bin - 0.5;
      hi[d] = (b[d] + 1) * bin - 0.5;
    }
    while (true) {
      AmbientVector<double> x = AmbientVector<double>::Zero(r + 1);
      double weight = jac;
      for (int d = 0; d < r; ++d) {
        const double half = 0.5 * (hi[d] - lo[d]);
        x += lam.col(d) * ((lo[d] + half * (gy[node[d]] + 1)) / root_n);
        weight *= half * gw[node[d]];
      }
      integral += weight * ibm_density(ibm, t, x);
      int d = 0;
      while (d < r && ++node[d] == 4) node[d++] = 0;
      if (d == r) break;
    }
    density_mass += integral;
    const auto it = law_bins.find(b);
    const double m = it == law_bins.end() ? 0.0 : it->second;
    sum_abs += std::abs(m - integral);
    if (it != law_bins.end()) law_bins.erase(it);
  });
  for (const auto& [key, m] : law_bins) sum_abs += m;  // bins beyond the integrated range
  out.tv = 0.5 * (sum_abs + law.escaped + std::max(0.0, 1.0 - density_mass));
  return out;
}

ExperimentReport limit_check(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentReport rep;
  rep.experiment = "limit-check";
  rep.config = cfg;
  const IbmParams ibm = ibm_params(cfg.rank);

  struct Run {
    int big_n;
    double t;
    int steps;
  };
  std::vector<Run> plan;
  int window = 1;
  for (double t : cfg.t_list)
    for (int big_n : cfg.n_schedule) {
      const int steps = static_cast<int>(std::floor(big_n * t + 1e-9));
      plan.push_back({big_n, t, steps});
      window = std::max(window, auto_window(cfg, steps, 0));
    }
  std::vector<int> times;
  for (const Run& run : plan) times.push_back(run.steps);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  const Kernels k = build(cfg.rank, cfg.q, window, cfg.kernel);
  const auto laws = dp_laws(k.kernel, Weight::zero(cfg.rank), times, LeakPolicy::absorb);
  auto law_at = [&](int steps) -> const LawOnCone<double>& {
    return laws[std::lower_bound(times.begin(), times.end(), steps) - times.begin()];
  };

  rep.extra["window"] = window;
  rep.extra["time_constant"] = ibm.c;
  rep.extra["time_constant_source"] = "covariance c per step; GUE entry variance fitted by quadrature";
  rep.extra["gue_variance"] = ibm.gue_variance;
  rep.extra["density_normalization"] = ibm.z1;
  rep.extra["spectral_gap"] = k.rho;

  for (std::size_t ti = 0; ti < cfg.t_list.size(); ++ti) {
    const double t = cfg.t_list[ti];
    std::vector<LimitComparison> cmp;
    for (const Run& run : plan) {
      if (run.t != t) continue;
      const LawOnCone<double>& law = law_at(run.steps);
      if (cfg.kernel == KernelKind::doob && law.escaped > cfg.leak_tolerance) {
        std::ostringstream os;
        os << "limit-check: " << format_double(law.escaped) << " of the mass left window " << window
           << " by step " << run.steps << "; raise window or tail_sigmas";
        throw WindowTooSmallError(os.str());
      }
      cmp.push_back(compare_with_density(law, ibm, run.big_n, t, cfg));
      const LimitComparison& c = cmp.back();
      Json j;
      j["N"] = run.big_n;
      j["t"] = t;
      j["steps"] = run.steps;
      j["tv"] = c.tv;
      j["sup_rel_err"] = c.sup_rel_err;
      j["grid_points"] = c.grid_points;
      j["escaped"] = c.escaped;
      j["bin_size"] = c.bin_size;
      j["tv_shifted"] = c.tv_shifted;
      j["sup_rel_err_shifted"] = c.sup_rel_err_shifted;
      rep.runs.push_back(j);
      std::string name = "law_N" + std::to_string(run.big_n);
      if (cfg.t_list.size() > 1) name += "_t" + std::to_string(ti);
      rep.files.emplace_back(name + ".csv", c.csv);
    }
    const std::string tag = cfg.t_list.size() > 1 ? "[t=" + format_double(t) + "]" : "";
    bool tv_down = true, err_down = true;
    for (std::size_t i = 1; i < cmp.size(); ++i) {
      tv_down = tv_down && cmp[i].tv < cmp[i - 1].tv;
      err_down = err_down && cmp[i].sup_rel_err < cmp[i - 1].sup_rel_err;
    }
    add_check(rep, "tv_decreasing" + tag, tv_down, cmp.back().tv, 0);
    add_check(rep, "sup_rel_err_decreasing" + tag, err_down, cmp.back().sup_rel_err, 0);
    add_check(rep, "final_tv" + tag, cmp.back().tv < cfg.tv_tolerance, cmp.back().tv, cfg.tv_tolerance);
    add_check(rep, "final_sup_rel_err" + tag, cmp.back().sup_rel_err < cfg.pointwise_tolerance,
              cmp.back().sup_rel_err, cfg.pointwise_tolerance);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// bridge check

ExperimentReport bridge_check(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentReport rep;
  rep.experiment = "bridge-check";
  rep.config = cfg;
  std::vector<int> schedule = cfg.n_schedule;
  std::sort(schedule.begin(), schedule.end());
  const int max_n = cfg.bridge_max_n;
  if (schedule.front() < max_n) throw ConfigError("bridge-check: every N must be >= bridge_max_n");

  std::vector<std::vector<Weight>> grid(max_n + 1);
  for (int n = 0; n <= max_n; ++n) grid[n] = reachable_weights(cfg.rank, cfg.q, n);

  std::ostringstream csv;
  csv << csv_metadata(cfg.rank, cfg.q, KernelKind::plain, (schedule.back() + max_n + 1) / 2, cfg.seed);
  csv << "N,n," << weight_columns(cfg.rank) << ",ratio,target,rel_err\n";

  std::vector<double> errors;
  double n0_err = 0;
  for (int big_n : schedule) {
    const BridgeEvaluator eval(cfg.rank, cfg.q, big_n, max_n, max_n);
    double worst = 0;
    for (int n = 0; n <= max_n; ++n)
      for (const Weight& w : grid[n]) {
        const BridgeValue v = eval.evaluate(n, w);
        csv << big_n << ',' << n << ',' << weight_cells(w) << ',' << format_double(v.ratio) << ','
            << format_double(v.target) << ',' << format_double(v.rel_err) << '\n';
        if (n == 0) {
          n0_err = std::max(n0_err, std::abs(v.ratio - 1.0));
        } else {
          worst = std::max(worst, std::abs(v.rel_err));
        }
      }
    errors.push_back(worst);
    Json j;
    j["N"] = big_n;
    j["max_rel_err"] = worst;
    if (errors.size() > 1) {
      const std::size_t i = errors.size() - 1;
      j["rate_exponent"] = std::log(errors[i - 1] / errors[i]) / std::log(double(schedule[i]) / schedule[i - 1]);
    }
    rep.runs.push_back(j);
  }
  rep.files.emplace_back("bridge.csv", csv.str());
  rep.extra["spectral_gap"] = spectral_gap(simple_rw_params(cfg.rank, cfg.q));

  add_check(rep, "n0_exact", n0_err < 1e-12, n0_err, 1e-12);
  bool down = true;
  double lo = INFINITY, hi = -INFINITY;
  for (std::size_t i = 1; i < errors.size(); ++i) {
    down = down && errors[i] < errors[i - 1];
    const double e = std::log(errors[i - 1] / errors[i]) / std::log(double(schedule[i]) / schedule[i - 1]);
    lo = std::min(lo, e);
    hi = std::max(hi, e);
  }
  add_check(rep, "errors_decreasing", down, errors.back(), 0);
  if (errors.size() > 1) {
    add_check(rep, "rate_exponent_min", lo >= cfg.rate_min, lo, cfg.rate_min, "error ~ N^{-exponent}");
    add_check(rep, "rate_exponent_max", hi <= cfg.rate_max, hi, cfg.rate_max, "error ~ N^{-exponent}");
  }
  add_check(rep, "final_max_rel_err", errors.back() < cfg.bridge_tolerance, errors.back(), cfg.bridge_tolerance);
  return rep;
}

// ---------------------------------------------------------------------------
// tightness

ExperimentReport tightness_check(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentReport rep;
  rep.experiment = "tightness-check";
  rep.config = cfg;
  std::vector<double> etas = cfg.eta_list;
  std::vector<double> alphas = cfg.alpha_list;
  std::sort(etas.begin(), etas.end());
  std::sort(alphas.begin(), alphas.end());
  if (std::find(etas.begin(), etas.end(), cfg.tightness_eta) == etas.end())
    throw ConfigError("tightness-check: tightness_eta must appear in eta_list");
  if (std::find(alphas.begin(), alphas.end(), cfg.tightness_alpha) == alphas.end())
    throw ConfigError("tightness-check: tightness_alpha must appear in alpha_list");

  int window = 1;
  for (int big_n : cfg.n_schedule)
    window = std::max(window, auto_window(cfg, static_cast<int>(std::ceil(etas.back() * big_n)), 0));
  const Kernels k = build(cfg.rank, cfg.q, window, cfg.kernel);
  std::vector<double> norms(k.index->size());
  for (int i = 0; i < k.index->size(); ++i) norms[i] = ambient<double>(k.index->weight(i)).norm();

  std::ostringstream csv;
  csv << csv_metadata(cfg.rank, cfg.q, cfg.kernel, window, cfg.seed);
  csv << "N,eta,alpha,estimate,std_error\n";

  bool small = true, mono_alpha = true, mono_eta = true;
  double worst = 0;
  for (int big_n : cfg.n_schedule) {
    const double root_n = std::sqrt(double(big_n));
    std::vector<int> cut(etas.size());
    for (std::size_t e = 0; e < etas.size(); ++e) cut[e] = static_cast<int>(std::floor(etas[e] * big_n + 1e-9));
    const int steps = cut.back();
    std::vector<std::vector<std::uint64_t>> hits(etas.size(), std::vector<std::uint64_t>(alphas.size(), 0));
    mc_paths(k.kernel, Weight::zero(cfg.rank), steps, cfg.n_paths, cfg.seed,
             [&](std::uint64_t, std::span<const int> path) {
               double sup = 0;
               std::size_t e = 0;
               for (int s = 0; s <= steps; ++s) {
                 sup = std::max(sup, norms[path[s]] / root_n);
                 while (e < etas.size() && cut[e] == s) {
                   for (std::size_t a = 0; a < alphas.size(); ++a)
                     if (sup >= alphas[a]) ++hits[e][a];
                   ++e;
                 }
               }
             });
    const double n = static_cast<double>(cfg.n_paths);
    std::vector<std::vector<double>> p(etas.size(), std::vector<double>(alphas.size()));
    std::vector<std::vector<double>> se = p;
    for (std::size_t e = 0; e < etas.size(); ++e)
      for (std::size_t a = 0; a < alphas.size(); ++a) {
        p[e][a] = hits[e][a] / n;
        se[e][a] = std::sqrt(std::max(p[e][a] * (1 - p[e][a]), 1.0 / n) / n);
        csv << big_n << ',' << format_double(etas[e]) << ',' << format_double(alphas[a]) << ','
            << format_double(p[e][a]) << ',' << format_double(se[e][a]) << '\n';
        Json j;
        j["N"] = big_n;
        j["eta"] = etas[e];
        j["alpha"] = alphas[a];
        j["estimate"] = p[e][a];
        j["std_error"] = se[e][a];
        rep.runs.push_back(j);
        if (a > 0 && p[e][a] > p[e][a - 1] + 2 * std::hypot(se[e][a], se[e][a - 1])) mono_alpha = false;
        if (e > 0 && p[e][a] + 2 * std::hypot(se[e][a], se[e - 1][a]) < p[e - 1][a]) mono_eta = false;
      }
    const std::size_t te = std::find(etas.begin(), etas.end(), cfg.tightness_eta) - etas.begin();
    const std::size_t ta = std::find(alphas.begin(), alphas.end(), cfg.tightness_alpha) - alphas.begin();
    const double lower = p[te][ta] - 2 * se[te][ta];
    worst = std::max(worst, lower);
    if (!(lower < cfg.tightness_epsilon)) small = false;
  }
  rep.files.emplace_back("tightness.csv", csv.str());
  rep.extra["window"] = window;
  add_check(rep, "small_eta_uniform", small, worst, cfg.tightness_epsilon,
            "max over N of estimate - 2 se at (tightness_eta, tightness_alpha)");
  add_check(rep, "monotone_in_alpha", mono_alpha, 0, 0);
  add_check(rep, "monotone_in_eta", mono_eta, 0, 0);
  return rep;
}

// ---------------------------------------------------------------------------
// interior start

namespace {

struct Moments {
  AmbientVector<double> mean;
  AmbientMatrix<double> cov;
};

Moments moments(const std::vector<AmbientVector<double>>& xs) {
  const int d = static_cast<int>(xs.front().size());
  Moments m{AmbientVector<double>::Zero(d), AmbientMatrix<double>::Zero(d, d)};
  for (const auto& x : xs) m.mean += x;
  m.mean /= double(xs.size());
  for (const auto& x : xs) m.cov += (x - m.mean) * (x - m.mean).transpose();
  m.cov /= double(xs.size() - 1);
  return m;
}

std::vector<AmbientVector<double>> head(const std::vector<AmbientVector<double>>& xs, std::size_t n) {
  return {xs.begin(), xs.begin() + static_cast<std::ptrdiff_t>(std::min(n, xs.size()))};
}

// Scaled marginals of the walk at the given step counts.
std::vector<std::vector<AmbientVector<double>>> walk_marginals(const RadialKernel<double>& kernel, const Weight& start,
                                                               const std::vector<int>& steps, std::uint64_t n_paths,
                                                               std::uint64_t seed, int big_n) {
  std::vector<std::vector<AmbientVector<double>>> out(steps.size());
  const WeightIndex& index = kernel.index();
  mc_paths(kernel, start, steps.back(), n_paths, seed, [&](std::uint64_t, std::span<const int> path) {
    for (std::size_t j = 0; j < steps.size(); ++j) out[j].push_back(scaled_point(index.weight(path[steps[j]]), big_n));
  });
  return out;
}

std::vector<AmbientVector<double>> drifted_gaussian(const AmbientVector<double>& mean, const AmbientMatrix<double>& basis,
                                                    double sd, std::size_t n, std::uint64_t seed) {
  const int r = static_cast<int>(basis.cols());
  std::vector<AmbientVector<double>> out;
  out.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::mt19937_64 gen(splitmix64(seed ^ k));
    Eigen::VectorXd z(r);
    for (int d = 0; d < r; d += 2) {
      const auto [a, b] = normal_pair(gen(), gen());
      z[d] = a;
      if (d + 1 < r) z[d + 1] = b;
    }
    out.push_back(mean + sd * basis * z);
  }
  return out;
}

}  // namespace

ExperimentReport interior_start_check(const ExperimentConfig& cfg) {
  cfg.validate();
  ExperimentReport rep;
  rep.experiment = "interior-start-check";
  rep.config = cfg;
  if (cfg.start.empty()) throw ConfigError("interior-start-check: start is required");
  const IbmParams ibm = ibm_params(cfg.rank);
  const AmbientVector<double> a = start_point(cfg.rank, cfg.start);
  if (!(wall_distance(a) > 0)) throw ConfigError("interior-start-check: start must be in the open chamber");
  std::vector<double> ts = cfg.t_list;
  std::sort(ts.begin(), ts.end());

  Json warnings = Json::array();
  for (int big_n : cfg.n_schedule) {
    const double root_n = std::sqrt(double(big_n));
    if (wall_distance(a) < 2 / root_n)
      warnings.push_back("start within 2/sqrt(N) of a wall at N = " + std::to_string(big_n));
    const Weight lambda0 = nearest_weight(root_n * a);
    const AmbientVector<double> s = scaled_point(lambda0, big_n);
    std::vector<int> steps;
    for (double t : ts) steps.push_back(static_cast<int>(std::lround(t * big_n)));
    const int window = auto_window(cfg, steps.back(), lambda0.level());
    const Kernels k = build(cfg.rank, cfg.q, window, cfg.kernel);
    const auto walk = walk_marginals(k.kernel, lambda0, steps, cfg.energy_samples, cfg.seed, big_n);
    const auto diffusion = simulate_diffusion(ibm, s, ts, cfg.energy_samples, cfg.dt, cfg.seed ^ 0xd1ff);

    std::ostringstream csv;
    csv << csv_metadata(cfg.rank, cfg.q, cfg.kernel, window, cfg.seed);
    csv << "# N: " << big_n << "\n# start: " << weight_cells(lambda0) << "\n";
    csv << "t,energy_statistic,energy_p_value";
    for (int d = 1; d <= cfg.rank + 1; ++d) csv << ",walk_mean" << d << ",diffusion_mean" << d;
    csv << "\n";

    for (std::size_t j = 0; j < ts.size(); ++j) {
      const EnergyTest e = energy_test(head(walk[j], cfg.energy_samples), diffusion[j], cfg.energy_permutations,
                                       cfg.seed + j);
      const Moments mw = moments(walk[j]);
      const Moments md = moments(diffusion[j]);
      csv << format_double(ts[j]) << ',' << format_double(e.statistic) << ',' << format_double(e.p_value);
      for (int d = 0; d <= cfg.rank; ++d) csv << ',' << format_double(mw.mean[d]) << ',' << format_double(md.mean[d]);
      csv << '\n';
      Json run;
      run["N"] = big_n;
      run["t"] = ts[j];
      run["energy_statistic"] = e.statistic;
      run["energy_p_value"] = e.p_value;
      rep.runs.push_back(run);
      add_check(rep, "energy[N=" + std::to_string(big_n) + ",t=" + format_double(ts[j]) + "]",
                e.p_value >= cfg.energy_level, e.p_value, cfg.energy_level, "permutation p-value");
    }

    // small time: drifted Gaussian N(s + c t grad log pi(s), c t I); moments are diagnostics
    const double t0 = ts.front();
    const AmbientMatrix<double> basis = RootSystem(cfg.rank).hyperplane_basis();
    const AmbientVector<double> predicted = ibm.c * t0 * grad_log_pi(s);
    const auto gauss = drifted_gaussian(s + predicted, basis, std::sqrt(ibm.c * t0), cfg.energy_samples,
                                        cfg.seed ^ 0x6a55);
    const EnergyTest eg = energy_test(head(walk.front(), cfg.energy_samples), gauss, cfg.energy_permutations,
                                      cfg.seed ^ 0x5a11);
    const auto early = walk_marginals(k.kernel, lambda0, {steps.front()}, cfg.n_paths, cfg.seed ^ 0x3a11, big_n);
    const Moments m0 = moments(early.front());
    const double drift_err = (m0.mean - s - predicted).norm() / predicted.norm();
    const AmbientMatrix<double> cov = basis.transpose() * m0.cov * basis / (ibm.c * t0);
    const double cov_err = (cov - AmbientMatrix<double>::Identity(cfg.rank, cfg.rank)).cwiseAbs().maxCoeff();
    Json small;
    small["N"] = big_n;
    small["t"] = t0;
    small["gaussian_energy_p_value"] = eg.p_value;
    small["mean_displacement_rel_err"] = drift_err;
    small["covariance_max_dev"] = cov_err;
    rep.runs.push_back(small);
    const std::string tag = "[N=" + std::to_string(big_n) + "]";
    add_check(rep, "small_t_drifted_gaussian" + tag, eg.p_value >= cfg.energy_level, eg.p_value, cfg.energy_level,
              "walk at the first t vs N(a + c t grad log pi(a), c t I)");
    add_check(rep, "small_t_drift" + tag, drift_err < cfg.drift_tolerance, drift_err, cfg.drift_tolerance,
              "|E[Y_t] - a - c t grad log pi(a)| / |c t grad log pi(a)|");
    add_check(rep, "small_t_covariance" + tag, cov_err < cfg.covariance_tolerance, cov_err,
              cfg.covariance_tolerance, "max entry of |Cov / (c t) - I| in an orthonormal hyperplane basis");
    rep.files.emplace_back("interior_N" + std::to_string(big_n) + ".csv", csv.str());

    if (cfg.write_paths) {
      std::ostringstream pcsv;
      pcsv << csv_metadata(cfg.rank, cfg.q, cfg.kernel, window, cfg.seed);
      pcsv << "t,path";
      for (int d = 1; d <= cfg.rank + 1; ++d) pcsv << ",x" << d;
      pcsv << "\n";
      for (std::size_t j = 0; j < ts.size(); ++j)
        for (std::size_t p = 0; p < walk[j].size(); ++p) {
          pcsv << format_double(ts[j]) << ',' << p;
          for (int d = 0; d <= cfg.rank; ++d) pcsv << ',' << format_double(walk[j][p][d]);
          pcsv << '\n';
        }
      rep.files.emplace_back("paths_N" + std::to_string(big_n) + ".csv", pcsv.str());
    }

    // deep start: the transformed walk against the flat walk on P
    if (!cfg.deep_start.empty()) {
      const AmbientVector<double> deep = start_point(cfg.rank, cfg.deep_start);
      const Weight lambda_deep = nearest_weight(root_n * deep);
      const int deep_steps = static_cast<int>(std::lround(cfg.deep_t * big_n));
      const int deep_window = auto_window(cfg, deep_steps, lambda_deep.level());
      const Kernels doob = build(cfg.rank, cfg.q, deep_window, KernelKind::doob);
      const auto flat = assemble_kernel<double>(simple_rw_params(cfg.rank, 1), solve_step_counts(cfg.rank, 1, deep_window));
      const auto wd = walk_marginals(doob.kernel, lambda_deep, {deep_steps}, cfg.energy_samples, cfg.seed ^ 0xdee9, big_n);
      const auto wf = walk_marginals(flat, lambda_deep, {deep_steps}, cfg.energy_samples, cfg.seed ^ 0xf1a7, big_n);
      const EnergyTest e = energy_test(wd.front(), wf.front(), cfg.energy_permutations, cfg.seed ^ 0xe7);
      Json run;
      run["N"] = big_n;
      run["deep_t"] = cfg.deep_t;
      run["deep_energy_p_value"] = e.p_value;
      rep.runs.push_back(run);
      add_check(rep, "deep_start_matches_flat_walk" + tag, e.p_value >= cfg.energy_level, e.p_value, cfg.energy_level,
                "transformed walk vs uniform nearest-neighbour walk on P");
    }
  }
  rep.extra["time_constant"] = ibm.c;
  rep.extra["warnings"] = warnings;
  return rep;
}

}  // namespace chamberwalk
