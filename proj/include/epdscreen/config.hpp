#pragma once

#include <string>
#include <vector>

namespace epdscreen {

// Resolved run configuration; every field has a default so a minimal config
// file (just the command) is valid.
struct RunConfig {
  std::string command = "universal";

  // instance: either an explicit (thetas, masses) pair or a tagged grid
  std::vector<double> thetas;
  std::vector<double> masses;
  std::string dist = "uniform";
  double range_lo = 0.1;
  double range_hi = 0.9;
  int n = 100;
  double pbar = 1.0;
  std::string multipliers = "myerson";  // or "optimize"

  // cost
  std::string cost_kind = "entropy";  // or "scaled_entropy"
  double gamma = 0.5;
  double alpha = 2.0;  // only for scaled_entropy

  // sweep / study parameters
  std::string family = "screening";
  double eta_max = 6.0;
  int grid = 1201;
  int trials = 10000;
  int sweep_grid = 100;
  double v_h = 10.0 / 11.0;
  double pi_h = 0.6;
  std::vector<double> gammas = {0.125, 0.25, 0.5, 1.0};
  std::vector<int> n_list = {10, 20, 50, 100, 200};

  double tol = 1e-9;
  unsigned seed = 12345;
  int threads = 0;  // 0 -> EPD_SCREEN_THREADS or single-threaded

  std::string out;
  std::string format = "csv";  // or "json"
  bool stamp = false;

  bool operator==(const RunConfig&) const = default;
};

// Parse + validate; throws DomainError naming the offending field.
RunConfig load_config(const std::string& path);
void save_config(const RunConfig& cfg, const std::string& path);
void validate_config(const RunConfig& cfg);

// "# key=value" lines echoing the resolved config (output provenance header).
std::string config_comment_header(const RunConfig& cfg);

// Parallelism degree: explicit value, else EPD_SCREEN_THREADS, else 1.
int resolve_threads(int requested);

}  // namespace epdscreen
