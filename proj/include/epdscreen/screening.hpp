#pragma once

#include "epdscreen/concavify.hpp"
#include "epdscreen/core.hpp"

namespace epdscreen {

enum class DistTag { None, Uniform };

// N-type screening primitives: type grid, masses, transfer cap, and the
// per-report information cost (already carrying any grid normalization).
struct ScreeningInstance {
  std::vector<double> thetas;
  std::vector<double> masses;
  double pbar = 1.0;
  CostSpec cost = CostSpec::entropy(0.5);
  DistTag dist = DistTag::None;
  double theta_lo = 0, theta_hi = 0;  // range of the tagged distribution
  Domain domain;

  int n() const { return static_cast<int>(thetas.size()); }
  void validate() const;

  // Uniform type grid on [lo, hi] with equal masses; midpoint placement.
  static ScreeningInstance uniform_grid(int N, double lo, double hi, CostSpec cost,
                                        double pbar);
};

// Multipliers of the local upward-IC constraints plus the two IR constraints.
struct MultiplierVector {
  std::vector<double> lambdas;  // lambda_1..lambda_{N-1}
  double mu = 0;                // bottom IR (acts as lambda_0)
  double mu_top = 0;            // top IR, usually slack

  // lambda_j with the boundary convention lambda_0 = mu, lambda_N = 0.
  double lambda(int j) const {
    if (j <= 0) return mu;
    if (j > static_cast<int>(lambdas.size())) return 0;
    return lambdas[j - 1];
  }
  void validate(double lambda_bar) const;
};

enum class Region { Degenerate, Binary, Ternary };

struct ReportSolution {
  Experiment experiment;
  std::vector<double> x;  // allocation at each atom, in {0,1}
  std::vector<double> p;  // transfer at each atom, in {0,pbar}
  double kappa_x = 0;  // NaN when the allocation margin has no interior kink
  double kappa_p = 0;  // NaN when the transfer margin has no interior kink
  double value = 0;    // concavified Lagrangian contribution
  Region region = Region::Degenerate;
  int support = 1;
};

struct MechanismSolution {
  std::vector<ReportSolution> reports;
  std::vector<double> q;  // allocation schedule (post ironing)
  std::vector<double> U;  // information rents from the envelope identity
  std::vector<double> K;  // investigation cost per report
  std::vector<int> I;     // information intensity = support - 1
  double dual_value = 0;
  double net_revenue = 0;  // primal revenue at the threshold rules, net of cost
  double total_cost = 0;
  bool ironed = false;
};

struct FeasibilityReport {
  double mean_one_slack = 0;     // max |mean - 1| over reports
  double bounds_slack = 0;       // max violation of x in [0,1], p in [0,pbar]
  double monotonicity_slack = 0; // max decrease of q along the grid
  double envelope_slack = 0;     // max |U_j - telescoped rents|
  double ic_slack = 0;           // max upward-IC violation
  double primal_revenue = 0;
  double dual_value = 0;
  double duality_gap = 0;        // dual - primal
  bool feasible = false;
  bool weak_duality = false;
};

// Phi(theta) = theta - (1 - F(theta))/f(theta) under the tagged distribution.
double virtual_surplus(const ScreeningInstance& inst, int j);

// Dual coefficients at report j (0-based): allocation margin
// A_j(z) = lambda_{j-1} theta_j - lambda_j theta_{j+1} z, transfer margin
// B_j(z) = pi_j - lambda_{j-1} + lambda_j z. The top report also absorbs the
// top-IR multiplier. Returns {A0, A1, B0, B1} with A(z) = A0 + A1 z.
struct DualCoefficients {
  double a0 = 0, a1 = 0;  // allocation margin
  double b0 = 0, b1 = 0;  // transfer margin
};
DualCoefficients dual_coefficients(const ScreeningInstance& inst, int j,
                                   const MultiplierVector& lam);

// Upper envelope of the four corner actions (x,p) in {0,1} x {0,pbar}.
// With limited_liability = false the transfer is pinned by the envelope and
// only the allocation margin remains (two actions, at most one kink).
PolicyEnvelope dual_pieces(const ScreeningInstance& inst, int j,
                           const MultiplierVector& lam, bool limited_liability = true);

// Full inner solve at fixed multipliers: per-report concavification, threshold
// rules, schedules, ironing, dual value.
MechanismSolution solve_inner(const ScreeningInstance& inst, const MultiplierVector& lam);

// Dual value only (hot path of the outer loop).
double dual_value(const ScreeningInstance& inst, const MultiplierVector& lam);

// Grid analog of lambda(theta) = 1 - F(theta): right tail mass.
MultiplierVector myerson_multipliers(const ScreeningInstance& inst);

struct MyersonBenchmark {
  std::vector<double> q;
  double revenue = 0;
  double theta0 = 0;     // zero of the interpolated virtual surplus
  bool boundary = false; // Phi single-signed; theta0 clamped to the grid edge
};
MyersonBenchmark myerson_benchmark(const ScreeningInstance& inst);

// Mass-weighted isotonic regression (pool adjacent violators).
std::vector<double> iron(const std::vector<double>& q, const std::vector<double>& masses);

FeasibilityReport check_primal(const ScreeningInstance& inst, const MechanismSolution& sol);

}  // namespace epdscreen
