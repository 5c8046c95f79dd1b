// chamberwalk: command-line front end.

#include "chamberwalk/experiments.hpp"
#include "chamberwalk/macdonald.hpp"
#include "chamberwalk/q_combinatorics.hpp"

#include "CLI11.hpp"

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

using namespace chamberwalk;

namespace {

constexpr int kExitStatistical = 2;
constexpr int kExitError = 1;

struct Common {
  int rank = 1;
  int q = 2;
  int window = -1;  // tables: 10; dp and simulate: the exact reach
  std::string out = "-";
};

void add_common(CLI::App* app, Common& c, bool with_window = true) {
  app->add_option("--rank,-r", c.rank, "rank r of A_r")->check(CLI::Range(1, 4));
  app->add_option("--q", c.q, "thickness parameter q")->check(CLI::PositiveNumber);
  if (with_window) app->add_option("--window,-w", c.window, "maximal level")->check(CLI::PositiveNumber);
  app->add_option("--out,-o", c.out, "output file, - for stdout");
}

void emit(const std::string& path, const std::string& body) {
  if (path == "-") {
    std::cout << body;
  } else {
    write_atomic(path, body);
  }
}

Weight parse_weight(const std::vector<int>& coords, int rank) {
  if (coords.empty()) return Weight::zero(rank);
  if (static_cast<int>(coords.size()) != rank) throw ConfigError("weight needs exactly rank coordinates");
  Eigen::VectorXi m(rank);
  for (int k = 0; k < rank; ++k) m[k] = coords[k];
  const Weight w(m);
  if (!w.is_dominant()) throw ConfigError("weight must be dominant");
  return w;
}

std::string cells(const Weight& w) {
  std::string s;
  for (int k = 0; k < w.rank(); ++k) s += (k ? "," : "") + std::to_string(w[k]);
  return s;
}

std::string columns(int rank, const std::string& prefix) {
  std::string s;
  for (int k = 1; k <= rank; ++k) s += (k > 1 ? "," : "") + prefix + std::to_string(k);
  return s;
}

KernelKind parse_kind(const std::string& s) {
  if (s == "doob") return KernelKind::doob;
  if (s == "plain") return KernelKind::plain;
  throw ConfigError("kernel must be doob or plain");
}

RadialKernel<double> make_kernel(int rank, int q, int window, KernelKind kind) {
  KernelBundle b = build_kernels(rank, q, window, kind == KernelKind::doob);
  return kind == KernelKind::doob ? std::move(*b.doob) : std::move(b.plain);
}

// ---------------------------------------------------------------------------

int table_window(const Common& c) { return c.window < 0 ? 10 : c.window; }

int root_data(const Common& c) {
  const RootSystem rs(c.rank);
  Json j;
  j["rank"] = c.rank;
  j["positive_roots"] = rs.num_positive_roots();
  j["h_zero"] = h_zero(c.rank);
  j["weyl_group_order"] = rs.weyl_elements().size();
  j["norm_constant"] = norm_constant_double(c.rank);
  j["weight_lattice_covolume"] = rs.weight_lattice_covolume();
  auto matrix = [](const AmbientMatrix<double>& m) {
    Json cols = Json::array();
    for (int k = 0; k < m.cols(); ++k) {
      Json col = Json::array();
      for (int d = 0; d < m.rows(); ++d) col.push_back(m(d, k));
      cols.push_back(col);
    }
    return cols;
  };
  j["fundamental_weights"] = matrix(rs.fundamental_weights());
  j["positive_root_vectors"] = matrix(rs.positive_roots());
  Json orbits = Json::array();
  for (int i = 1; i <= c.rank; ++i) {
    Json orbit = Json::array();
    for (const Weight& w : rs.minuscule_orbit(i)) orbit.push_back(to_string(w));
    orbits.push_back(orbit);
  }
  j["minuscule_orbits"] = orbits;
  emit(c.out, j.dump(2) + "\n");
  return 0;
}

int q_table(const Common& c) {
  std::ostringstream os;
  os << columns(c.rank, "m") << ",qt_exponent,N_lambda\n";
  for (const Weight& w : dominant_weights(c.rank, table_window(c)))
    os << cells(w) << ',' << q_t(w, c.q).exponent() << ',' << n_lambda(w, c.q) << '\n';
  emit(c.out, os.str());
  return 0;
}

int f0_table(const Common& c) {
  const F0Table table(c.rank, c.q, table_window(c));
  std::ostringstream os;
  os << columns(c.rank, "m") << ",F0,envelope_ratio\n";
  for (const Weight& w : dominant_weights(c.rank, table_window(c))) {
    const F0Entry& e = table.entry(w);
    os << cells(w) << ',' << format_double(table.value(w)) << ',' << format_double(e.envelope_ratio) << '\n';
  }
  emit(c.out, os.str());
  return 0;
}

int pn(const Common& c, int n, const std::vector<int>& lambda_coords) {
  const Weight lambda = parse_weight(lambda_coords, c.rank);
  const PlancherelQuadrature quad(c.rank, c.q);
  const auto kernel = make_kernel(c.rank, c.q, n, KernelKind::plain);
  const auto law = dp_law(kernel, Weight::zero(c.rank), n);
  const double per_vertex = law.at(lambda) / n_lambda(lambda, c.q).convert_to<double>();
  Json j;
  j["rank"] = c.rank;
  j["q"] = c.q;
  j["n"] = n;
  j["lambda"] = to_string(lambda);
  j["quadrature"] = quad.p_n(n, lambda);
  j["dp"] = per_vertex;
  j["grid"] = quad.grid();
  j["spectral_gap"] = quad.spectral_gap();
  emit(c.out, j.dump(2) + "\n");
  return 0;
}

int kernel_cmd(const Common& c, bool exact) {
  const StepDistribution p = simple_rw_params(c.rank, c.q);
  const StepCountTable counts = solve_step_counts(c.rank, c.q, table_window(c));
  // worst provenance among the counts feeding each entry
  std::map<std::pair<Weight, Weight>, Provenance> prov;
  for (const auto& [key, row] : counts.rows())
    for (const StepCount& sc : row) {
      auto [it, fresh] = prov.try_emplace({key.lambda, sc.target}, sc.provenance);
      if (!fresh && static_cast<int>(sc.provenance) > static_cast<int>(it->second)) it->second = sc.provenance;
    }
  std::ostringstream os;
  os << csv_metadata(c.rank, c.q, KernelKind::plain, table_window(c), 0);
  const std::string head = columns(c.rank, "from_m") + "," + columns(c.rank, "to_m");
  auto row_loop = [&](const auto& kernel, auto&& write_value) {
    const WeightIndex& index = kernel.index();
    for (int k = 0; k < kernel.num_rows(); ++k)
      for (int e = kernel.row_begin(k); e < kernel.row_end(k); ++e) {
        const Weight& from = index.weight(k);
        const Weight& to = index.weight(kernel.col(e));
        os << cells(from) << ',' << cells(to) << ',';
        write_value(kernel.value(e));
        const auto it = prov.find({from, to});
        os << ',' << (it == prov.end() ? "closed_form" : to_string(it->second)) << '\n';
      }
  };
  if (exact) {
    const auto kernel = assemble_kernel<QuadraticSurd>(p, counts);
    bool rational = true;
    for (std::size_t e = 0; e < kernel.nonzeros(); ++e) rational = rational && kernel.value(int(e)).is_rational();
    if (rational) {
      os << head << ",prob_num,prob_den,provenance\n";
      row_loop(kernel, [&](const QuadraticSurd& v) {
        os << numerator(v.rational_part()) << ',' << denominator(v.rational_part());
      });
    } else {
      os << head << ",prob_exact,provenance\n";
      row_loop(kernel, [&](const QuadraticSurd& v) { os << v.str(); });
    }
  } else {
    const auto kernel = assemble_kernel<double>(p, counts);
    os << head << ",prob,provenance\n";
    row_loop(kernel, [&](double v) { os << format_double(v); });
  }
  emit(c.out, os.str());
  return 0;
}

int dp_cmd(const Common& c, int n, const std::vector<int>& start, const std::string& kind_name) {
  const KernelKind kind = parse_kind(kind_name);
  const Weight lambda0 = parse_weight(start, c.rank);
  const int window = c.window > 0 ? c.window : std::max(1, required_window(lambda0, n));
  const auto kernel = make_kernel(c.rank, c.q, window, kind);
  const auto law = dp_law(kernel, lambda0, n, LeakPolicy::absorb);
  std::ostringstream os;
  os << csv_metadata(c.rank, c.q, kind, window, 0);
  os << "# steps: " << n << "\n# start: " << cells(lambda0) << "\n# escaped: " << format_double(law.escaped) << "\n";
  os << columns(c.rank, "m") << ",mass\n";
  for (const auto& [w, m] : law.support()) os << cells(w) << ',' << format_double(m) << '\n';
  emit(c.out, os.str());
  return 0;
}

int bridge_cmd(const Common& c, int big_n, int max_n) {
  const BridgeEvaluator eval(c.rank, c.q, big_n, max_n, max_n);
  std::ostringstream os;
  os << csv_metadata(c.rank, c.q, KernelKind::plain, (big_n + max_n + 1) / 2, 0);
  os << "# N: " << big_n << "\n";
  os << "n," << columns(c.rank, "m") << ",ratio,target,rel_err\n";
  for (int n = 0; n <= max_n; ++n)
    for (const Weight& w : reachable_weights(c.rank, c.q, n)) {
      const BridgeValue v = eval.evaluate(n, w);
      os << n << ',' << cells(w) << ',' << format_double(v.ratio) << ',' << format_double(v.target) << ','
         << format_double(v.rel_err) << '\n';
    }
  emit(c.out, os.str());
  return 0;
}

int simulate_cmd(const Common& c, int n, std::uint64_t paths, std::uint64_t seed, const std::vector<int>& start,
                 const std::string& kind_name) {
  const KernelKind kind = parse_kind(kind_name);
  const Weight lambda0 = parse_weight(start, c.rank);
  const int window = c.window > 0 ? c.window : std::max(1, required_window(lambda0, n));
  const auto kernel = make_kernel(c.rank, c.q, window, kind);
  const auto law = mc_endpoint_law(kernel, lambda0, n, paths, seed);
  std::ostringstream os;
  os << csv_metadata(c.rank, c.q, kind, window, seed);
  os << "# steps: " << n << "\n# paths: " << paths << "\n# start: " << cells(lambda0) << "\n";
  os << columns(c.rank, "m") << ",frequency\n";
  for (const auto& [w, m] : law.support()) os << cells(w) << ',' << format_double(m) << '\n';
  emit(c.out, os.str());
  return 0;
}

int ibm_cmd(const Common& c, double t, std::size_t samples, std::uint64_t seed, const std::string& sampler) {
  const IbmParams p = ibm_params(c.rank);
  std::ostringstream os;
  os << "# rank: " << c.rank << "\n# t: " << format_double(t) << "\n# seed: " << seed << "\n# sampler: " << sampler
     << "\n# c: " << format_double(p.c) << "\n# z1: " << format_double(p.z1) << "\n";
  std::vector<AmbientVector<double>> xs;
  if (sampler == "gue") {
    xs = gue_sampler(p, t, samples, seed);
  } else if (sampler == "rejection") {
    xs = density_sampler(p, t, samples, seed);
  } else {
    throw ConfigError("sampler must be gue or rejection");
  }
  os << columns(c.rank + 1, "x") << ",density\n";
  for (const auto& x : xs) {
    for (int d = 0; d <= c.rank; ++d) os << format_double(x[d]) << ',';
    os << format_double(ibm_density(p, t, x)) << '\n';
  }
  emit(c.out, os.str());
  return 0;
}

using Experiment = ExperimentReport (*)(const ExperimentConfig&);

int run_experiment(Experiment f, const std::string& config, const std::vector<std::string>& overrides) {
  const ExperimentConfig cfg = load_config(config, overrides);
  const ExperimentReport rep = f(cfg);
  write_report(rep);
  for (const Check& ch : rep.checks)
    std::cout << (ch.passed ? "PASS " : "FAIL ") << ch.name << "  value=" << format_double(ch.value)
              << "  threshold=" << format_double(ch.threshold) << '\n';
  std::cout << rep.experiment << ": " << (rep.passed() ? "PASS" : "FAIL") << "  (" << cfg.output_dir
            << "/report.json)\n";
  return rep.passed() ? 0 : kExitStatistical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random walks on Ã_r buildings and their Weyl-chamber limits"};
  app.set_version_flag("--version", std::string(CHAMBERWALK_VERSION));
  app.require_subcommand(1);

  Common c;
  int n = 4;
  int big_n = 256;
  int max_n = 4;
  std::uint64_t paths = 10000;
  std::uint64_t seed = 1;
  std::size_t samples = 1000;
  double t = 1.0;
  bool exact = false;
  std::string kind = "plain";
  std::string sampler = "gue";
  std::vector<int> lambda;
  std::string config;
  std::vector<std::string> overrides;

  auto* root = app.add_subcommand("root-data", "root system data as JSON");
  add_common(root, c, false);
  auto* qt = app.add_subcommand("q-table", "q_t exponents and sphere sizes N_lambda");
  add_common(qt, c);
  auto* f0t = app.add_subcommand("f0-table", "ground-state spherical function F0");
  add_common(f0t, c);
  auto* pnc = app.add_subcommand("pn", "p_n(O, x) by Plancherel quadrature and by DP");
  add_common(pnc, c, false);
  pnc->add_option("-n", n, "steps")->check(CLI::NonNegativeNumber);
  pnc->add_option("--lambda", lambda, "target weight m1 .. mr");
  auto* ker = app.add_subcommand("kernel", "radial transition kernel");
  add_common(ker, c);
  ker->add_flag("--exact", exact, "exact probabilities");
  auto* dp = app.add_subcommand("dp", "exact n-step law of the radial walk");
  add_common(dp, c);
  dp->add_option("-n", n, "steps")->check(CLI::NonNegativeNumber);
  dp->add_option("--start", lambda, "start weight m1 .. mr");
  dp->add_option("--kernel", kind, "plain or doob");
  auto* br = app.add_subcommand("bridge", "bridge ratios at one N");
  add_common(br, c, false);
  br->add_option("-N", big_n, "horizon")->check(CLI::PositiveNumber);
  br->add_option("--max-n", max_n, "largest n")->check(CLI::NonNegativeNumber);
  auto* sim = app.add_subcommand("simulate", "Monte Carlo endpoint law");
  add_common(sim, c);
  sim->add_option("-n", n, "steps")->check(CLI::NonNegativeNumber);
  sim->add_option("--paths", paths, "number of paths");
  sim->add_option("--seed", seed, "seed");
  sim->add_option("--start", lambda, "start weight m1 .. mr");
  sim->add_option("--kernel", kind, "plain or doob");
  auto* ibm = app.add_subcommand("ibm", "samples of the chamber Brownian motion at time t");
  add_common(ibm, c, false);
  ibm->add_option("-t", t, "time")->check(CLI::PositiveNumber);
  ibm->add_option("--samples", samples, "sample count");
  ibm->add_option("--seed", seed, "seed");
  ibm->add_option("--sampler", sampler, "gue or rejection");

  std::map<CLI::App*, Experiment> experiments;
  auto experiment = [&](const char* name, const char* help, Experiment f) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config, "JSON config")->check(CLI::ExistingFile);
    sub->add_option("--override", overrides, "key=value, repeatable");
    experiments[sub] = f;
  };
  experiment("limit-check", "DP law of Y^N_t against the chamber density", limit_check);
  experiment("bridge-check", "bridge ratios along an N schedule", bridge_check);
  experiment("interior-start-check", "walk from an interior point against the diffusion", interior_start_check);
  experiment("tightness-check", "Monte Carlo sup estimates", tightness_check);

  CLI11_PARSE(app, argc, argv);

  try {
    for (const auto& [sub, f] : experiments)
      if (sub->parsed()) return run_experiment(f, config, overrides);
    if (root->parsed()) return root_data(c);
    if (qt->parsed()) return q_table(c);
    if (f0t->parsed()) return f0_table(c);
    if (pnc->parsed()) return pn(c, n, lambda);
    if (ker->parsed()) return kernel_cmd(c, exact);
    if (dp->parsed()) return dp_cmd(c, n, lambda, kind);
    if (br->parsed()) return bridge_cmd(c, big_n, max_n);
    if (sim->parsed()) return simulate_cmd(c, n, paths, seed, lambda, kind);
    if (ibm->parsed()) return ibm_cmd(c, t, samples, seed, sampler);
  } catch (const std::exception& e) {
    std::cerr << "chamberwalk: " << e.what() << '\n';
    return kExitError;
  }
  return kExitError;
}
