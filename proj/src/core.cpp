#include "epdscreen/core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace epdscreen {

CostSpec CostSpec::entropy(double gamma) {
  if (!(gamma > 0)) throw DomainError("entropy cost requires gamma > 0");
  CostSpec c;
  c.kind_ = Kind::Entropy;
  c.gamma_ = gamma;
  return c;
}

CostSpec CostSpec::scaled_entropy(double gamma, double alpha) {
  if (!(gamma > 0)) throw DomainError("scaled entropy cost requires gamma > 0");
  if (!(alpha > 1)) throw DomainError("scaled entropy cost requires alpha > 1");
  CostSpec c;
  c.kind_ = Kind::ScaledEntropy;
  c.gamma_ = gamma;
  c.alpha_ = alpha;
  return c;
}

CostSpec CostSpec::tabulated(std::vector<double> z, std::vector<double> psi) {
  if (z.size() != psi.size() || z.size() < 3)
    throw DomainError("tabulated cost needs >= 3 matching (z, psi) pairs");
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!(z[i] > 0) || !std::isfinite(psi[i]))
      throw DomainError("tabulated cost requires z > 0 and finite psi");
    if (i > 0 && !(z[i] > z[i - 1]))
      throw DomainError("tabulated cost grid must be strictly increasing");
  }
  // strict convexity: discrete second differences of the divided slopes
  for (std::size_t i = 1; i + 1 < z.size(); ++i) {
    const double sl = (psi[i] - psi[i - 1]) / (z[i] - z[i - 1]);
    const double sr = (psi[i + 1] - psi[i]) / (z[i + 1] - z[i]);
    if (!(sr > sl)) throw DomainError("tabulated cost is not strictly convex");
  }
  CostSpec c;
  c.kind_ = Kind::TabulatedConvex;
  c.tz_ = std::move(z);
  c.tpsi_ = std::move(psi);
  // Fritsch-Carlson monotone cubic slopes on the derivative-monotone data
  const std::size_t n = c.tz_.size();
  std::vector<double> d(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i)
    d[i] = (c.tpsi_[i + 1] - c.tpsi_[i]) / (c.tz_[i + 1] - c.tz_[i]);
  c.tm_.resize(n);
  c.tm_[0] = d[0];
  c.tm_[n - 1] = d[n - 2];
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (d[i - 1] * d[i] <= 0) {
      c.tm_[i] = 0;
    } else {
      const double h0 = c.tz_[i] - c.tz_[i - 1], h1 = c.tz_[i + 1] - c.tz_[i];
      const double wh = 3 * (h0 + h1);
      c.tm_[i] = wh / ((2 * h1 + h0) / d[i - 1] + (h1 + 2 * h0) / d[i]);
    }
  }
  return c;
}

double CostSpec::gamma_eff() const {
  if (!is_entropy_family())
    throw DomainError("gamma_eff is defined for the entropy family only");
  return kind_ == Kind::ScaledEntropy ? gamma_ * alpha_ : gamma_;
}

double CostSpec::operator()(double z) const {
  if (!(z > 0)) throw DomainError("information cost is defined for z > 0 only");
  switch (kind_) {
    case Kind::Entropy:
      return -2.0 * gamma_ * std::log(z);
    case Kind::ScaledEntropy:
      return -2.0 * gamma_ * alpha_ * std::log(z);
    case Kind::TabulatedConvex: {
      if (z < tz_.front() || z > tz_.back())
        throw DomainError("z outside the tabulated cost grid");
      const auto it = std::upper_bound(tz_.begin(), tz_.end(), z);
      const std::size_t i = std::min<std::size_t>(tz_.size() - 2, it - tz_.begin() - 1);
      const double h = tz_[i + 1] - tz_[i];
      const double t = (z - tz_[i]) / h;
      const double h00 = (1 + 2 * t) * (1 - t) * (1 - t);
      const double h10 = t * (1 - t) * (1 - t);
      const double h01 = t * t * (3 - 2 * t);
      const double h11 = t * t * (t - 1);
      return h00 * tpsi_[i] + h10 * h * tm_[i] + h01 * tpsi_[i + 1] + h11 * h * tm_[i + 1];
    }
  }
  return 0;
}

CostSpec CostSpec::scaled_by(double factor) const {
  if (!(factor > 0)) throw DomainError("cost scale factor must be positive");
  CostSpec c = *this;
  if (is_entropy_family()) {
    c.kind_ = Kind::Entropy;
    c.gamma_ = gamma_eff() * factor;
    c.alpha_ = 1;
  } else {
    for (double& p : c.tpsi_) p *= factor;
    for (double& m : c.tm_) m *= factor;
  }
  return c;
}

double eval_cost(const CostSpec& cost, double z) { return cost(z); }

int PolicyEnvelope::piece_index(double z) const {
  const auto it = std::upper_bound(breakpoints.begin(), breakpoints.end(), z);
  return static_cast<int>(it - breakpoints.begin());
}

double PolicyEnvelope::operator()(double z) const {
  if (!domain.contains(z)) throw DomainError("envelope evaluated outside its domain");
  return pieces[piece_index(z)].at(z);
}

std::pair<double, double> PolicyEnvelope::piece_interval(int i) const {
  const double lo = i == 0 ? domain.z_lo : breakpoints[i - 1];
  const double hi = i == dimension() ? domain.z_hi : breakpoints[i];
  return {lo, hi};
}

double eval_envelope(const PolicyEnvelope& env, double z) { return env(z); }

PolicyEnvelope upper_envelope(std::span<const AffinePiece> actions, Domain domain,
                              std::span<const int> labels) {
  if (actions.empty()) throw DomainError("upper_envelope needs at least one action");
  if (!(domain.z_lo > 0) || !(domain.z_hi > domain.z_lo))
    throw DomainError("upper_envelope needs 0 < z_lo < z_hi");
  for (const auto& a : actions)
    if (!std::isfinite(a.intercept) || !std::isfinite(a.slope))
      throw DomainError("non-finite action coefficients");

  struct Line {
    AffinePiece p;
    int label;
  };
  std::vector<Line> lines;
  lines.reserve(actions.size());
  for (std::size_t i = 0; i < actions.size(); ++i)
    lines.push_back({actions[i], labels.empty() ? static_cast<int>(i) : labels[i]});
  std::sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) {
    if (a.p.slope != b.p.slope) return a.p.slope < b.p.slope;
    return a.p.intercept < b.p.intercept;
  });
  // drop parallel dominated lines
  std::vector<Line> uniq;
  for (const auto& l : lines) {
    if (!uniq.empty() && uniq.back().p.slope == l.p.slope) uniq.pop_back();
    uniq.push_back(l);
  }

  // convex-hull trick: intersection of consecutive kept lines must move right
  auto isect = [](const Line& a, const Line& b) {
    return (a.p.intercept - b.p.intercept) / (b.p.slope - a.p.slope);
  };
  std::vector<Line> hull;
  for (const auto& l : uniq) {
    while (hull.size() >= 2 &&
           isect(hull[hull.size() - 2], l) <= isect(hull[hull.size() - 2], hull.back()))
      hull.pop_back();
    while (hull.size() == 1 && l.p.at(domain.z_lo) >= hull.back().p.at(domain.z_lo))
      hull.pop_back();
    hull.push_back(l);
  }

  // clip to the domain
  std::vector<Line> kept;
  std::vector<double> bps;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const double lo = i == 0 ? -std::numeric_limits<double>::infinity()
                             : isect(hull[i - 1], hull[i]);
    const double hi = i + 1 == hull.size() ? std::numeric_limits<double>::infinity()
                                           : isect(hull[i], hull[i + 1]);
    if (hi <= domain.z_lo || lo >= domain.z_hi) continue;
    if (!kept.empty()) bps.push_back(std::max(lo, domain.z_lo));
    kept.push_back(hull[i]);
  }
  // merge coincident breakpoints (codimension-1 kink collisions)
  for (std::size_t i = 0; i + 1 < bps.size();) {
    if (bps[i + 1] - bps[i] <= kKinkMergeTol * (1 + std::abs(bps[i]))) {
      bps.erase(bps.begin() + i + 1);
      kept.erase(kept.begin() + i + 1);
    } else {
      ++i;
    }
  }

  PolicyEnvelope env;
  env.domain = domain;
  env.breakpoints = std::move(bps);
  for (const auto& l : kept) {
    env.pieces.push_back(l.p);
    env.labels.push_back(l.label);
  }
  return env;
}

Experiment Experiment::degenerate(double z) {
  Experiment f;
  f.atoms = {{z, 1.0}};
  return f;
}

double Experiment::mean() const {
  double m = 0;
  for (const auto& a : atoms) m += a.w * a.z;
  return m;
}

double Experiment::total_weight() const {
  double w = 0;
  for (const auto& a : atoms) w += a.w;
  return w;
}

Experiment make_experiment(std::vector<Experiment::Atom> atoms, bool require_mean_one) {
  std::erase_if(atoms, [](const Experiment::Atom& a) { return a.w <= kWeightDropTol; });
  if (atoms.empty()) throw DomainError("experiment has no atoms above the weight tolerance");
  std::sort(atoms.begin(), atoms.end(),
            [](const auto& a, const auto& b) { return a.z < b.z; });
  std::vector<Experiment::Atom> merged;
  for (const auto& a : atoms) {
    if (!(a.z > 0)) throw DomainError("experiment atoms require z > 0");
    if (!merged.empty() && a.z - merged.back().z <= kAtomMergeTol) {
      auto& m = merged.back();
      m.z = (m.z * m.w + a.z * a.w) / (m.w + a.w);
      m.w += a.w;
    } else {
      merged.push_back(a);
    }
  }
  double total = 0;
  for (const auto& a : merged) total += a.w;
  if (std::abs(total - 1.0) > 1e-10) {
    if (std::abs(total - 1.0) > 1e-6)
      throw DomainError("experiment weights do not sum to one");
  }
  for (auto& a : merged) a.w /= total;
  Experiment f;
  f.atoms = std::move(merged);
  if (require_mean_one && std::abs(f.mean() - 1.0) > 1e-9)
    throw DomainError("experiment violates the mean-one constraint");
  return f;
}

double experiment_cost(const CostSpec& cost, const Experiment& f) {
  double c = 0;
  for (const auto& a : f.atoms) c += a.w * cost(a.z);
  return c;
}

double MFunction::operator()(double z) const { return envelope(z) - cost(z); }

double eval_M(const MFunction& m, double z) { return m(z); }

}  // namespace epdscreen
