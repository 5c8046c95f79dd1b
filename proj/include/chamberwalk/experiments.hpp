#pragma once

// Reproduction harness: configuration, the four experiments, and
// deterministic CSV / JSON output.

#include "chamberwalk/ibm.hpp"
#include "chamberwalk/walk.hpp"

#include "json.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace chamberwalk {

using Json = nlohmann::ordered_json;

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct ExperimentConfig {
  int rank = 1;
  int q = 2;
  KernelKind kernel = KernelKind::doob;
  std::vector<int> n_schedule{64, 256, 1024};
  std::vector<double> t_list{1.0};
  /// Start a in fundamental-weight coordinates (empty: the origin).
  std::vector<double> start;
  std::uint64_t n_paths = 10000;
  std::uint64_t seed = 1;
  /// 0: choose from the diffusive scale.
  int window = 0;

  // limit check
  double tv_tolerance = 0.05;
  double pointwise_tolerance = 0.10;
  double bin_width = 0.15;       // bin side in scaled units
  double interior_margin = 0.5;  // wall distance of the comparison grid, in units of sqrt(c t)
  double density_floor = 0.05;   // grid keeps u with density >= floor * max
  double leak_tolerance = 1e-10;
  double tail_sigmas = 8.0;      // window reach beyond the radial mean, doob kernel

  // bridge check
  int bridge_max_n = 4;
  double bridge_tolerance = 0.02;
  double rate_min = 0.7;
  double rate_max = 1.3;

  // interior start check
  double dt = 1e-4;
  std::size_t energy_samples = 1000;
  int energy_permutations = 199;
  double energy_level = 0.01;
  // small-t moments at the first t, over n_paths walks
  double drift_tolerance = 0.10;
  double covariance_tolerance = 0.05;
  std::vector<double> deep_start;  // empty: skip the deep comparison
  double deep_t = 0.1;

  // tightness check
  std::vector<double> eta_list{0.001, 0.005, 0.01, 0.05};
  std::vector<double> alpha_list{0.5, 1.0, 2.0};
  double tightness_eta = 0.01;
  double tightness_alpha = 2.0;
  double tightness_epsilon = 0.05;

  std::string output_dir = "out";
  bool write_paths = false;

  /// Throws ConfigError.
  void validate() const;
};

Json to_json(const ExperimentConfig& c);
/// Unknown keys are an error.
ExperimentConfig config_from_json(const Json& j);
/// "key=value"; value is parsed as JSON when possible, else taken as a string.
void apply_override(Json& j, const std::string& assignment);
ExperimentConfig load_config(const std::filesystem::path& path, const std::vector<std::string>& overrides);

struct Check {
  std::string name;
  bool passed = false;
  double value = 0;
  double threshold = 0;
  std::string detail;
};

struct ExperimentReport {
  std::string experiment;
  ExperimentConfig config;
  Json runs = Json::array();
  std::vector<Check> checks;
  Json extra = Json::object();
  /// CSV files to write: (file name, contents).
  std::vector<std::pair<std::string, std::string>> files;

  bool passed() const;
  Json to_json() const;
};

/// Library version, compiler and RNG description for report provenance.
Json environment_metadata();

/// "%.17g", with nan / inf spelled out.
std::string format_double(double x);

/// Metadata lines "# key: value" heading every DP / MC CSV.
std::string csv_metadata(int rank, int q, KernelKind kernel, int window, std::uint64_t seed);

/// Writes to a temporary name in the same directory, then renames.
void write_atomic(const std::filesystem::path& path, const std::string& contents);
/// report.json plus every CSV, under cfg.output_dir.
void write_report(const ExperimentReport& report);

// ---------------------------------------------------------------------------

/// The window used for runs of n steps: the exact reach, capped at the
/// diffusive scale (tail_sigmas standard deviations past the radial mean)
/// for the Doob kernel.
int auto_window(const ExperimentConfig& cfg, int steps, int start_level);

/// Binned comparison of a DP law of Y^N_t with the chamber density.
struct LimitComparison {
  int big_n = 0;
  int steps = 0;
  double t = 0;
  double tv = 0;             // binned, plus escaped mass
  double sup_rel_err = 0;    // over the interior grid
  int grid_points = 0;
  double escaped = 0;
  int bin_size = 0;          // lattice steps per bin side
  // Diagnostics, not gated: the same comparison against the density read at
  // lambda + delta_q rho, delta_q = (q + 1) / (q - 1), the offset of the
  // discrete harmonic function.  Pointwise TV, no binning.
  double tv_shifted = 0;
  double sup_rel_err_shifted = 0;
  std::string csv;
};

LimitComparison compare_with_density(const LawOnCone<double>& law, const IbmParams& ibm, int big_n, double t,
                                     const ExperimentConfig& cfg);

ExperimentReport limit_check(const ExperimentConfig& cfg);
ExperimentReport bridge_check(const ExperimentConfig& cfg);
ExperimentReport interior_start_check(const ExperimentConfig& cfg);
ExperimentReport tightness_check(const ExperimentConfig& cfg);

/// Ambient point of a start given in fundamental-weight coordinates.
AmbientVector<double> start_point(int rank, const std::vector<double>& fundamental_coords);

}  // namespace chamberwalk
