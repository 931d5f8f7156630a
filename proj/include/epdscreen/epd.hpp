#pragma once

#include <string>

#include "epdscreen/concavify.hpp"
#include "epdscreen/core.hpp"

namespace epdscreen {

enum class FamilyTag { Monitoring, Screening, Quality, Capacity, Custom };

// Finite action family whose upper envelope defines the dual value P(z).
struct ActionFamily {
  std::vector<AffinePiece> actions;
  std::vector<std::string> action_labels;
  FamilyTag tag = FamilyTag::Custom;

  PolicyEnvelope envelope(Domain domain = {}) const;
};

struct MonitoringParams {
  double alpha = 0;  // deviation action value alpha + beta z, vs. 0 for comply
  double beta = -1;
};

// One report of the screening dual: coefficients of the allocation margin
// A(z) = lam_prev*theta - lam_next*theta_next*z and the transfer margin
// B(z) = pi - lam_prev + lam_next*z, transfer cap pbar.
struct ScreeningFamilyParams {
  double lam_prev = 1;
  double lam_next = 0.5;
  double theta = 0.5;
  double theta_next = 0.6;
  double pi = 0.2;
  double pbar = 1.0;
};

// Quality-choice extension: allocation x, quality q in {lo, hi}, transfer p.
// Buyer utility theta*v(q)*x - p; seller pays c(q) per unit allocated.
struct QualityParams {
  double v_lo = 0.5, v_hi = 1.0;
  double c_lo = 0.0, c_hi = 0.3;
  double theta_L = 0.5, theta_H = 0.8;
  double pi_L = 0.4, pi_H = 0.6;
  double lambda = 1.0;  // bottom multiplier; the IC multiplier is pi_H
  double pbar = 1.0;
};

struct CapacityParams {
  ScreeningFamilyParams base;
  double nu = 0.1;  // capacity shadow price, supplied (not solved for)
};

ActionFamily build_family(const MonitoringParams& p);
ActionFamily build_family(const ScreeningFamilyParams& p);
ActionFamily build_family(const QualityParams& p);
ActionFamily build_family(const CapacityParams& p);

struct SweepTrial {
  int d = 0;
  int support = 0;
  std::vector<double> kinks;
};

struct SweepReport {
  FamilyTag tag = FamilyTag::Custom;
  int n_trials = 0;
  unsigned seed = 0;
  int max_support = 0;
  int max_d = 0;
  int violations = 0;  // trials with support > d+1
  // min distance of any atom (weight > 1e-6) to an interior kink, in units of
  // the reference grid step (no-atom-at-kink diagnostic)
  double min_kink_distance = 0;
  std::vector<SweepTrial> trials;
};

// Randomized coefficient sweep preserving the family structure; includes a
// tightness-refined trial so the maximal support is actually observed.
SweepReport verify_support_bound(FamilyTag tag, const CostSpec& cost, int n_trials,
                                 unsigned seed);

struct TightnessResult {
  ActionFamily family;
  ConcavifyResult result;
  int d = 0;
  int support = 0;
  bool success = false;  // support == d+1 reached
};

// Construct/search an instance whose optimum uses d+1 support points with
// z = 1 inside the merged non-concave region.
TightnessResult search_tightness(FamilyTag tag, const CostSpec& cost, int budget,
                                 unsigned seed = 7);

}  // namespace epdscreen
