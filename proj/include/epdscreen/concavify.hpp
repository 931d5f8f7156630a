#pragma once

#include "epdscreen/core.hpp"

namespace epdscreen {

// Result of concavifying M at a given mean.
struct ConcavifyResult {
  Experiment experiment;
  double value = 0;            // M^c(mean)
  int support_size = 0;        // atoms surviving merge/drop tolerances
  std::vector<int> active_pieces;  // envelope piece index per atom
  bool degenerate = false;     // M concave at the mean; experiment is delta_mean
  bool truncated = false;      // an atom sits at the domain boundary
};

// Maximize the integral of M over mean-constrained experiments.
//
// For the entropy family the two-point tangency across any piece pair has a
// closed form; the general case falls back to a golden-section search on the
// supporting slope of the concave envelope.
ConcavifyResult concavify_at_mean(const MFunction& m, double mean = 1.0,
                                  int grid_points = 20001);

// Brute-force oracle: finite LP over a log-spaced grid, solved exactly as the
// upper concave hull of the sampled (z, M(z)) points. Test ground truth only.
ConcavifyResult concavify_lp_oracle(const MFunction& m, double mean, int grid_points);

// Closed-form concavification across a single convex kink for the entropy
// cost: eta = delta_beta*kappa/(2*gamma), b/a = exp(eta).
struct ClosedFormKink {
  double delta_beta = 0;
  double kappa = 0;
  double gamma = 0;
  double eta = 0;
  double a = 0;  // lower support point
  double b = 0;  // upper support point
  double w = 0;  // weight on a under the mean-one constraint
};

ClosedFormKink closed_form_single_kink(double delta_beta, double kappa, double gamma);

// Concavification with the extra per-report cost cap: sum w_i psi(z_i) <= cap.
ConcavifyResult concavify_capped(const MFunction& m, double mean, double cap,
                                 int grid_points);

}  // namespace epdscreen
