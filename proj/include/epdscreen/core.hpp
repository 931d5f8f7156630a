#pragma once

#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace epdscreen {

// Truncated likelihood-ratio domain [z_lo, z_hi].
struct Domain {
  double z_lo = 1e-4;
  double z_hi = 1e3;

  bool contains(double z) const { return z >= z_lo && z <= z_hi; }
};

// Numerical tolerances shared across modules.
inline constexpr double kAtomMergeTol = 1e-7;   // absolute in z
inline constexpr double kWeightDropTol = 1e-9;  // atoms below this weight are dropped
inline constexpr double kKinkMergeTol = 1e-10;  // coincident breakpoints merge

class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Strictly convex information cost psi(z) on z > 0.
//
// The leading case is the relative-entropy cost psi(z) = -2*gamma*log(z).
// ScaledEntropy multiplies it by alpha > 1 (cost-scaling comparative
// statics). TabulatedConvex interpolates a strictly convex table with a
// monotone piecewise cubic (Fritsch-Carlson).
class CostSpec {
 public:
  enum class Kind { Entropy, ScaledEntropy, TabulatedConvex };

  static CostSpec entropy(double gamma);
  static CostSpec scaled_entropy(double gamma, double alpha);
  static CostSpec tabulated(std::vector<double> z, std::vector<double> psi);

  Kind kind() const { return kind_; }
  double gamma() const { return gamma_; }
  double alpha() const { return alpha_; }

  bool is_entropy_family() const { return kind_ != Kind::TabulatedConvex; }
  // Effective gamma such that psi(z) = -2*gamma_eff*log(z); entropy family only.
  double gamma_eff() const;

  double operator()(double z) const;

  // Cost scaled by a positive factor (used for report-weighted Lagrangians).
  CostSpec scaled_by(double factor) const;

 private:
  CostSpec() = default;
  Kind kind_ = Kind::Entropy;
  double gamma_ = 0;
  double alpha_ = 1;
  // tabulated data + pchip slopes
  std::vector<double> tz_, tpsi_, tm_;
};

double eval_cost(const CostSpec& cost, double z);

// One affine action value alpha + beta*z.
struct AffinePiece {
  double intercept = 0;
  double slope = 0;

  double at(double z) const { return intercept + slope * z; }
};

// Convex upper envelope of finitely many affine pieces on a z-domain.
// pieces are ordered by strictly increasing slope; breakpoints[i] is the
// kink between pieces i and i+1. labels carry the originating action index.
struct PolicyEnvelope {
  std::vector<AffinePiece> pieces;
  std::vector<double> breakpoints;
  std::vector<int> labels;
  Domain domain;

  int dimension() const { return static_cast<int>(breakpoints.size()); }
  int piece_index(double z) const;
  double operator()(double z) const;
  // Active interval [lo, hi] of piece i within the domain.
  std::pair<double, double> piece_interval(int i) const;
};

PolicyEnvelope upper_envelope(std::span<const AffinePiece> actions, Domain domain = {},
                              std::span<const int> labels = {});

double eval_envelope(const PolicyEnvelope& env, double z);

// Finite experiment: distribution over likelihood ratios with mean one.
struct Experiment {
  struct Atom {
    double z = 1;
    double w = 1;
  };
  std::vector<Atom> atoms;

  static Experiment degenerate(double z = 1.0);

  double mean() const;
  double total_weight() const;
  int support_size() const { return static_cast<int>(atoms.size()); }
};

// Sorts, merges atoms closer than the merge tolerance, drops negligible
// weights, renormalizes, and (optionally) checks the mean-one constraint.
Experiment make_experiment(std::vector<Experiment::Atom> atoms, bool require_mean_one = true);

double experiment_cost(const CostSpec& cost, const Experiment& f);

// M(z) = P(z) - psi(z): piecewise strictly concave objective of the inner
// information-design problem.
struct MFunction {
  PolicyEnvelope envelope;
  CostSpec cost;

  double operator()(double z) const;
};

double eval_M(const MFunction& m, double z);

}  // namespace epdscreen
