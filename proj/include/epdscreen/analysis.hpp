#pragma once

#include <functional>

#include "epdscreen/saddle.hpp"
#include "epdscreen/screening.hpp"

namespace epdscreen {

// Universal allocation weight w(eta) = (e^eta - 1 - eta)/(e^eta + e^-eta - 2);
// strictly increasing from 1/2 to 1.
double w_universal(double eta);

// Logistic comparison l(eta) = 1/(1 + e^-eta) and the gap l - w on a grid.
struct LogisticGapCurve {
  std::vector<double> eta, w, logistic, gap;
  double argmax = 0;
  double max_gap = 0;
};
LogisticGapCurve logistic_gap(const std::vector<double>& eta_grid);

// Normalized investigation cost k(eta) = -w log a - (1-w) log b with the
// unit-threshold endpoints a = (1 - e^-eta)/eta, b = (e^eta - 1)/eta.
double normalized_k(double eta);

// Continuum investigation intensity eta(theta) = lambda(theta) * theta / (2 gamma_hat).
double eta_continuum(double lambda_value, double theta, double gamma_hat);

// Pointwise integrand of the continuum revenue functional on uniform [0,1]
// types: Phi(theta) w(eta) - 2 gamma_hat k(eta); reverts to max(Phi, 0) at
// lambda = 0 (the Myerson allocation).
double revenue_integrand(double theta, double lambda_value, double gamma_hat);

// Quadrature of the revenue functional over theta in [0,1] (Simpson).
double revenue_functional(const std::function<double(double)>& lambda_schedule,
                          double gamma_hat, int quadrature_n = 2001);

struct TwoTypeParams {
  double v_L = 0.5;
  double v_H = 10.0 / 11.0;
  double pi_H = 0.6;
  double gamma = 0.5;
  double pbar = 1.0;  // transfer cap, must exceed v_H
};

struct SweepCell {
  TwoTypeParams params;
  int support_class = 1;   // max support over the two reports
  double q_star = 0;       // low-type allocation
  double benefit = 0;      // (U_S* - U_S^NI) / W_eff
  double welfare_delta = 0;  // (W* - W^NI) / W_eff
  double investigation_cost = 0;
  double dual_value = 0;
  double u_s_ni = 0;
  double w_ni = 0;
  double w_star = 0;
};

SweepCell twotype_solve(const TwoTypeParams& params);

struct RegionWidthResult {
  std::vector<double> gammas;
  std::vector<double> widths;      // Lebesgue measure of {v_L : support > 1}
  std::vector<bool> single_interval;
  double loglog_slope = 0;  // fit over the largest three gammas
};

RegionWidthResult region_width(double pi_H, double v_H, std::vector<double> gammas,
                               double scan_step_rel = 1e-3);

struct ConvergenceEntry {
  int N = 0;
  int max_support = 0;
  double sup_distance_prev = 0;  // vs the previous N (piecewise-constant q)
  double rent_top = 0;           // U(theta_N)
  double rent_integral = 0;      // trapezoid of q over the type grid
  double step_mismatch = 0;      // max |q - myerson step| outside the band
  std::vector<double> thetas, q, K;
  std::vector<int> support;
};

struct ConvergenceStudy {
  std::vector<ConvergenceEntry> entries;
  double theta0 = 0;
};

ConvergenceStudy convergence_study(double theta_lo, double theta_hi, double gamma_hat,
                                   const std::vector<int>& n_list);

}  // namespace epdscreen
