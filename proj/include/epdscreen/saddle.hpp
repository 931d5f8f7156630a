#pragma once

#include <functional>

#include "epdscreen/screening.hpp"

namespace epdscreen {

struct SaddleConfig {
  double initial_step = 0.5;
  double backtrack = 0.5;   // Armijo shrink factor
  int max_iterations = 20000;
  double lambda_bar = 0;    // 0 -> 2 * max Myerson multiplier
  double value_tol = 1e-9;  // relative dual change over the stall window
  double grad_tol = 1e-7;   // projected-gradient norm
  double fd_step = 1e-5;    // scaled by (1 + |lambda|)
  unsigned seed = 12345;
  bool use_mu_top = false;  // optimize the top-IR multiplier too
  bool polish = true;       // Nelder-Mead polish in low dimension
};

struct SaddleResult {
  MultiplierVector multipliers;
  MechanismSolution solution;
  std::vector<double> trace;  // dual value per accepted iterate
  double grad_norm = 0;
  int iterations = 0;
  bool converged = false;
};

// Minimize the dual value over nonnegative multipliers, starting from the
// Myerson initialization; projected gradient with backtracking line search.
SaddleResult outer_optimize(const ScreeningInstance& inst, const SaddleConfig& config = {});

struct SaddleCheckReport {
  // max over experiment perturbations of L(lam*, F~) - L(lam*, F*); a saddle
  // point keeps this <= tol (F* maximizes at fixed multipliers)
  double worst_experiment_residual = 0;
  // max over multiplier perturbations of L(lam*, F*) - L(lam~, F*); a saddle
  // point keeps this <= tol (lam* minimizes at fixed experiments)
  double worst_multiplier_residual = 0;
  int n_perturb = 0;
};

SaddleCheckReport saddle_check(const ScreeningInstance& inst, const SaddleResult& result,
                               int n_perturb, double radius, unsigned seed = 991);

// Lagrangian at explicit multipliers and experiments (diagnostic).
double lagrangian_value(const ScreeningInstance& inst, const MultiplierVector& lam,
                        const std::vector<Experiment>& experiments);

struct HessianReport {
  std::vector<double> eigenvalues;  // ascending
  double min_eigenvalue = 0;
  double max_eigenvalue = 0;
};

// Finite-difference Hessian of the continuum revenue functional, discretized
// on an n_grid theta-grid, at the Myerson schedule lambda(theta) = 1 - theta.
HessianReport myerson_hessian_check(double gamma_hat, int n_grid = 20, double step = 1e-4);

// Central-difference Hessian of a scalar function.
std::vector<std::vector<double>> fd_hessian(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& x, double step);

}  // namespace epdscreen
