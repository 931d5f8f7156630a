#include "epdscreen/concavify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>

namespace epdscreen {

namespace {

constexpr double kGolden = 0.6180339887498949;

// Supporting-slope dual of the concavification: for each envelope piece i,
// h_i(s) = max_z { M_i(z) - s z } over the piece's clipped interval. The
// concave envelope at the mean is min_s max_i h_i(s) + s*mean.
struct PieceMax {
  double z = 0;
  double val = -std::numeric_limits<double>::infinity();
};

class PieceProblem {
 public:
  explicit PieceProblem(const MFunction& m) : m_(&m) {
    const auto& env = m.envelope;
    const int n = static_cast<int>(env.pieces.size());
    entropy_ = m.cost.is_entropy_family();
    if (entropy_) g2_ = 2.0 * m.cost.gamma_eff();
    for (int i = 0; i < n; ++i) {
      auto [lo, hi] = env.piece_interval(i);
      lo_.push_back(lo);
      hi_.push_back(hi);
    }
  }

  int n_pieces() const { return static_cast<int>(lo_.size()); }
  double lo(int i) const { return lo_[i]; }
  double hi(int i) const { return hi_[i]; }
  bool entropy() const { return entropy_; }
  double g2() const { return g2_; }

  PieceMax piece_max(int i, double s) const {
    const auto& p = m_->envelope.pieces[i];
    PieceMax r;
    if (entropy_) {
      double z;
      if (s > p.slope) {
        z = std::clamp(g2_ / (s - p.slope), lo_[i], hi_[i]);
      } else {
        z = hi_[i];  // increasing on the whole piece
      }
      r.z = z;
      r.val = p.at(z) + g2_ * std::log(z) - s * z;
      return r;
    }
    // generic strictly convex cost: golden-section on the concave objective
    auto f = [&](double z) { return p.at(z) - m_->cost(z) - s * z; };
    double a = lo_[i], b = hi_[i];
    double x1 = b - kGolden * (b - a), x2 = a + kGolden * (b - a);
    double f1 = f(x1), f2 = f(x2);
    for (int it = 0; it < 120 && b - a > 1e-13 * (1 + b); ++it) {
      if (f1 < f2) {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + kGolden * (b - a);
        f2 = f(x2);
      } else {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - kGolden * (b - a);
        f1 = f(x1);
      }
    }
    r.z = 0.5 * (a + b);
    r.val = f(r.z);
    return r;
  }

 private:
  const MFunction* m_;
  bool entropy_ = false;
  double g2_ = 0;
  std::vector<double> lo_, hi_;
};

// Least-norm nonnegative weights with sum one and the given mean.
std::vector<double> solve_weights(const std::vector<double>& z, double mean) {
  const int n = static_cast<int>(z.size());
  if (n == 1) return {1.0};
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  std::vector<double> w(n, 0.0);
  while (true) {
    const int k = static_cast<int>(idx.size());
    if (k == 1) {
      w.assign(n, 0.0);
      w[idx[0]] = 1.0;
      return w;
    }
    if (k == 2) {
      const double a = z[idx[0]], b = z[idx[1]];
      double wa = (b - mean) / (b - a);
      wa = std::clamp(wa, 0.0, 1.0);
      w.assign(n, 0.0);
      w[idx[0]] = wa;
      w[idx[1]] = 1.0 - wa;
      return w;
    }
    // min ||w||^2 s.t. sum w = 1, sum w z = mean  (active set = idx)
    double s1 = 0, sz = 0, szz = 0;
    for (int i : idx) {
      s1 += 1;
      sz += z[i];
      szz += z[i] * z[i];
    }
    const double det = s1 * szz - sz * sz;
    const double u = (szz * 1.0 - sz * mean) / det;
    const double v = (s1 * mean - sz * 1.0) / det;
    int worst = -1;
    double worst_w = -1e-12;
    std::vector<double> cand(n, 0.0);
    for (int i : idx) {
      const double wi = u + v * z[i];
      cand[i] = wi;
      if (wi < worst_w) {
        worst_w = wi;
        worst = i;
      }
    }
    if (worst < 0) return cand;
    idx.erase(std::find(idx.begin(), idx.end(), worst));
  }
}

ConcavifyResult assemble(const MFunction& m, double mean, double value,
                         const std::vector<double>& atom_z,
                         const std::vector<int>& atom_piece, bool degenerate) {
  ConcavifyResult res;
  res.value = value;
  res.degenerate = degenerate;
  const auto weights = solve_weights(atom_z, mean);
  std::vector<Experiment::Atom> atoms;
  for (std::size_t i = 0; i < atom_z.size(); ++i)
    if (weights[i] > kWeightDropTol) atoms.push_back({atom_z[i], weights[i]});
  Experiment f = make_experiment(std::move(atoms), false);
  res.support_size = f.support_size();
  if (res.support_size == 1) {
    // collapse to the exact mean so the constraint holds to machine precision
    f.atoms[0].z = mean;
    res.degenerate = true;
  }
  const Domain& dom = m.envelope.domain;
  for (const auto& a : f.atoms) {
    res.active_pieces.push_back(m.envelope.piece_index(a.z));
    if (a.z <= dom.z_lo * (1 + 1e-9) || a.z >= dom.z_hi * (1 - 1e-9)) res.truncated = true;
  }
  res.experiment = std::move(f);
  return res;
}

// Golden-section minimization of the convex dual g(s); robust general path.
ConcavifyResult dual_search(const MFunction& m, double mean, const PieceProblem& pp) {
  const int n = pp.n_pieces();
  auto g = [&](double s) {
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) best = std::max(best, pp.piece_max(i, s).val);
    return best + s * mean;
  };
  double bmin = std::numeric_limits<double>::infinity();
  double bmax = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    const double sl = m.envelope.pieces[i].slope;
    bmin = std::min(bmin, sl);
    bmax = std::max(bmax, sl);
  }
  const Domain& dom = m.envelope.domain;
  double slo, shi;
  if (pp.entropy()) {
    slo = bmin + pp.g2() / dom.z_hi - 1.0;
    shi = bmax + pp.g2() / dom.z_lo + 1.0;
  } else {
    // derivative range of -psi is unknown in closed form; probe numerically
    const double d_lo = (m.cost(dom.z_lo * 1.000001) - m.cost(dom.z_lo)) / (dom.z_lo * 1e-6);
    const double d_hi = (m.cost(dom.z_hi) - m.cost(dom.z_hi * 0.999999)) / (dom.z_hi * 1e-6);
    slo = bmin - std::abs(d_hi) - 1.0;
    shi = bmax + std::abs(d_lo) + 1.0;
  }
  double a = slo, b = shi;
  double x1 = b - kGolden * (b - a), x2 = a + kGolden * (b - a);
  double f1 = g(x1), f2 = g(x2);
  for (int it = 0; it < 300 && b - a > 1e-13 * (1 + std::abs(a) + std::abs(b)); ++it) {
    if (f1 > f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kGolden * (b - a);
      f2 = g(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kGolden * (b - a);
      f1 = g(x1);
    }
  }
  const double s = 0.5 * (a + b);
  std::vector<PieceMax> pm(n);
  double top = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    pm[i] = pp.piece_max(i, s);
    top = std::max(top, pm[i].val);
  }
  const double tol = 1e-9 * (1 + std::abs(top));
  std::vector<double> atom_z;
  std::vector<int> atom_piece;
  for (int i = 0; i < n; ++i) {
    if (pm[i].val >= top - tol) {
      atom_z.push_back(pm[i].z);
      atom_piece.push_back(i);
    }
  }
  const double value = top + s * mean;
  return assemble(m, mean, value, atom_z, atom_piece, false);
}

}  // namespace

ConcavifyResult concavify_at_mean(const MFunction& m, double mean, int grid_points) {
  if (grid_points < 10) throw DomainError("concavify_at_mean needs grid_points >= 10");
  const Domain& dom = m.envelope.domain;
  if (!(mean > dom.z_lo) || !(mean < dom.z_hi))
    throw DomainError("mean must lie strictly inside the z-domain");

  const PieceProblem pp(m);
  const int n = pp.n_pieces();
  const double v0 = m(mean);

  // Concavity certificate at the mean: the tangent at the mean supports M
  // everywhere iff no piece rises above it.
  {
    const int k = m.envelope.piece_index(mean);
    double s0;
    if (pp.entropy()) {
      s0 = m.envelope.pieces[k].slope + pp.g2() / mean;
    } else {
      const double h = 1e-7 * mean;
      s0 = (m(mean + h) - m(mean - h)) / (2 * h);
    }
    double sup = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < n; ++i) sup = std::max(sup, pp.piece_max(i, s0).val);
    const double line = v0 - s0 * mean;
    if (sup <= line + 1e-11 * (1 + std::abs(v0))) {
      ConcavifyResult res;
      res.experiment = Experiment::degenerate(mean);
      res.value = v0;
      res.support_size = 1;
      res.degenerate = true;
      res.active_pieces = {k};
      return res;
    }
  }

  if (!pp.entropy()) return dual_search(m, mean, pp);

  // Entropy fast path: closed-form two-point tangency per piece pair.
  // For arcs M_i = c_i + beta_i z + 2g log z the common tangent satisfies
  // b/a = exp((c_i - c_j)/(2g)) and 1/a - 1/b = (beta_j - beta_i)/(2g).
  const double g2 = pp.g2();
  struct Pair {
    double a, b, s, val;
    int i, j;
  };
  std::optional<Pair> best;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const auto& pi = m.envelope.pieces[i];
      const auto& pj = m.envelope.pieces[j];
      const double dbeta = pj.slope - pi.slope;
      const double dc = pi.intercept - pj.intercept;
      if (!(dbeta > 0) || !(dc > 0)) continue;
      const double eta = dc / g2;
      if (eta > 700) continue;  // tangency beyond the domain; dual path covers it
      const double a = (g2 / dbeta) * (-std::expm1(-eta));
      const double b = (g2 / dbeta) * std::expm1(eta);
      if (!(a < mean && mean < b)) continue;
      const double s = pi.slope + g2 / a;
      const double val = pi.at(a) + g2 * std::log(a) + s * (mean - a);
      if (a < pp.lo(i) || a > pp.hi(i) || b < pp.lo(j) || b > pp.hi(j)) continue;
      if (!best || val > best->val) best = Pair{a, b, s, val, i, j};
    }
  }

  if (!best) return dual_search(m, mean, pp);

  // Certify the chord and collect every piece it touches. Passing means the
  // tangent line majorizes M on the whole domain, so the value is exact.
  std::vector<PieceMax> pm(n);
  double top = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i) {
    pm[i] = pp.piece_max(i, best->s);
    top = std::max(top, pm[i].val);
  }
  const double line = best->val - best->s * mean;
  const double scale = 1 + std::abs(best->val);
  if (top > line + 1e-9 * scale) return dual_search(m, mean, pp);

  std::vector<double> atom_z;
  std::vector<int> atom_piece;
  for (int i = 0; i < n; ++i) {
    if (pm[i].val >= top - 1e-9 * scale) {
      atom_z.push_back(pm[i].z);
      atom_piece.push_back(i);
    }
  }
  return assemble(m, mean, best->val, atom_z, atom_piece, false);
}

ConcavifyResult concavify_lp_oracle(const MFunction& m, double mean, int grid_points) {
  if (grid_points < 10) throw DomainError("concavify_lp_oracle needs grid_points >= 10");
  const Domain& dom = m.envelope.domain;
  if (!(mean > dom.z_lo) || !(mean < dom.z_hi))
    throw DomainError("mean outside the feasible grid range");

  std::vector<double> zs(grid_points), vs(grid_points);
  const double lr = std::log(dom.z_hi / dom.z_lo);
  for (int k = 0; k < grid_points; ++k) {
    zs[k] = std::min(dom.z_lo * std::exp(lr * k / (grid_points - 1)), dom.z_hi);
    vs[k] = m(zs[k]);
  }
  // upper concave hull, monotone chain
  std::vector<int> hull;
  auto bad = [&](int a, int b, int c) {
    // keep if slope(a,b) > slope(b,c)
    return (vs[b] - vs[a]) * (zs[c] - zs[b]) <= (vs[c] - vs[b]) * (zs[b] - zs[a]);
  };
  for (int k = 0; k < grid_points; ++k) {
    while (hull.size() >= 2 && bad(hull[hull.size() - 2], hull.back(), k)) hull.pop_back();
    hull.push_back(k);
  }
  // hull segment containing the mean
  std::size_t seg = 0;
  while (seg + 1 < hull.size() && zs[hull[seg + 1]] < mean) ++seg;
  const int ia = hull[seg];
  const int ib = hull[std::min(seg + 1, hull.size() - 1)];

  ConcavifyResult res;
  if (ia == ib || zs[ib] <= mean) {
    res.experiment = Experiment::degenerate(mean);
    res.value = vs[ia];
    res.support_size = 1;
    res.degenerate = true;
    res.active_pieces = {m.envelope.piece_index(mean)};
    return res;
  }
  const double wa = (zs[ib] - mean) / (zs[ib] - zs[ia]);
  res.value = wa * vs[ia] + (1 - wa) * vs[ib];
  res.experiment = make_experiment({{zs[ia], wa}, {zs[ib], 1 - wa}}, false);
  res.support_size = res.experiment.support_size();
  res.degenerate = ib - ia <= 1;  // within one grid cell
  for (const auto& a : res.experiment.atoms)
    res.active_pieces.push_back(m.envelope.piece_index(a.z));
  return res;
}

ClosedFormKink closed_form_single_kink(double delta_beta, double kappa, double gamma) {
  if (!(delta_beta > 0) || !(kappa > 0) || !(gamma > 0))
    throw DomainError("closed_form_single_kink requires positive inputs");
  ClosedFormKink r;
  r.delta_beta = delta_beta;
  r.kappa = kappa;
  r.gamma = gamma;
  r.eta = delta_beta * kappa / (2 * gamma);
  if (r.eta > 700)
    throw NumericalError("investigation intensity eta > 700; rescale the problem");
  const double g2 = 2 * gamma;
  r.a = (g2 / delta_beta) * (-std::expm1(-r.eta));
  r.b = (g2 / delta_beta) * std::expm1(r.eta);
  const double num = kappa * std::expm1(r.eta) - r.eta;
  const double den = kappa * (std::expm1(r.eta) + std::expm1(-r.eta));
  r.w = r.eta == 0 ? 0.5 : num / den;
  return r;
}

namespace {

// Dense two-phase simplex, maximization, equality rows, w >= 0.
// Small row count (here 3); Bland's rule for anti-cycling.
struct SimplexResult {
  bool ok = false;
  double value = 0;
  std::vector<std::pair<int, double>> basis;  // (column, value)
};

SimplexResult simplex_max(const std::vector<double>& c,
                          const std::vector<std::vector<double>>& A,
                          std::vector<double> b) {
  const int m = static_cast<int>(A.size());
  const int n = static_cast<int>(c.size());
  // tableau with artificial columns n..n+m-1
  std::vector<std::vector<double>> T(m, std::vector<double>(n + m + 1, 0.0));
  for (int i = 0; i < m; ++i) {
    const double sgn = b[i] < 0 ? -1.0 : 1.0;
    for (int j = 0; j < n; ++j) T[i][j] = sgn * A[i][j];
    T[i][n + i] = 1.0;
    T[i][n + m] = sgn * b[i];
  }
  std::vector<int> basis(m);
  for (int i = 0; i < m; ++i) basis[i] = n + i;

  auto pivot = [&](int pr, int pc) {
    const double pv = T[pr][pc];
    for (double& x : T[pr]) x /= pv;
    for (int i = 0; i < m; ++i) {
      if (i == pr || T[i][pc] == 0) continue;
      const double f = T[i][pc];
      for (int j = 0; j <= n + m; ++j) T[i][j] -= f * T[pr][j];
    }
    basis[pr] = pc;
  };

  auto run = [&](const std::vector<double>& obj, int ncols) {
    for (int iter = 0; iter < 100000; ++iter) {
      // reduced costs (maximization): pick first column with positive rc
      int pc = -1;
      for (int j = 0; j < ncols; ++j) {
        double rc = obj[j];
        for (int i = 0; i < m; ++i) rc -= obj[basis[i]] * T[i][j];
        if (rc > 1e-10) {
          pc = j;
          break;
        }
      }
      if (pc < 0) return true;
      int pr = -1;
      double best = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m; ++i) {
        if (T[i][pc] > 1e-12) {
          const double r = T[i][n + m] / T[i][pc];
          if (r < best - 1e-15 || (std::abs(r - best) <= 1e-15 && (pr < 0 || basis[i] < basis[pr]))) {
            best = r;
            pr = i;
          }
        }
      }
      if (pr < 0) return false;  // unbounded
      pivot(pr, pc);
    }
    return false;
  };

  // phase 1: maximize -(sum of artificials)
  std::vector<double> obj1(n + m, 0.0);
  for (int i = 0; i < m; ++i) obj1[n + i] = -1.0;
  if (!run(obj1, n + m)) return {};
  double art = 0;
  for (int i = 0; i < m; ++i)
    if (basis[i] >= n) art += T[i][n + m];
  if (art > 1e-8) return {};  // infeasible
  // drive leftover artificials out where possible
  for (int i = 0; i < m; ++i) {
    if (basis[i] >= n) {
      for (int j = 0; j < n; ++j) {
        if (std::abs(T[i][j]) > 1e-9) {
          pivot(i, j);
          break;
        }
      }
    }
  }
  // phase 2
  std::vector<double> obj2(n + m, 0.0);
  for (int j = 0; j < n; ++j) obj2[j] = c[j];
  for (int i = 0; i < m; ++i)
    if (basis[i] >= n) obj2[basis[i]] = -1e12;  // keep stuck artificials at zero
  if (!run(obj2, n)) return {};

  SimplexResult r;
  r.ok = true;
  for (int i = 0; i < m; ++i) {
    if (basis[i] < n && T[i][n + m] > 0) {
      r.basis.push_back({basis[i], T[i][n + m]});
      r.value += c[basis[i]] * T[i][n + m];
    }
  }
  return r;
}

}  // namespace

ConcavifyResult concavify_capped(const MFunction& m, double mean, double cap,
                                 int grid_points) {
  if (cap < 0) throw DomainError("cost cap must be nonnegative");
  const ConcavifyResult uncapped = concavify_at_mean(m, mean, grid_points);
  const double uncapped_cost = experiment_cost(m.cost, uncapped.experiment);
  if (!std::isfinite(cap) || cap >= uncapped_cost - 1e-12) return uncapped;

  const Domain& dom = m.envelope.domain;
  std::vector<double> zs(grid_points);
  const double lr = std::log(dom.z_hi / dom.z_lo);
  for (int k = 0; k < grid_points; ++k)
    zs[k] = std::min(dom.z_hi, dom.z_lo * std::exp(lr * k / (grid_points - 1)));
  // a tight cap can force the degenerate experiment, so the mean itself must
  // be representable exactly
  if (dom.contains(mean)) zs.push_back(mean);
  const int n = static_cast<int>(zs.size());
  std::vector<double> c(n + 1, 0.0);
  std::vector<std::vector<double>> A(3, std::vector<double>(n + 1, 0.0));
  for (int k = 0; k < n; ++k) {
    c[k] = m(zs[k]);
    A[0][k] = 1.0;
    A[1][k] = zs[k];
    A[2][k] = m.cost(zs[k]);
  }
  A[2][n] = 1.0;  // slack on the cap row
  const auto sol = simplex_max(c, A, {1.0, mean, cap});
  if (!sol.ok) throw NumericalError("capped concavification LP failed");

  std::vector<double> atom_z;
  for (const auto& [col, w] : sol.basis)
    if (col < n && w > kWeightDropTol) atom_z.push_back(zs[col]);
  std::sort(atom_z.begin(), atom_z.end());

  ConcavifyResult res;
  std::vector<Experiment::Atom> atoms;
  for (const auto& [col, w] : sol.basis)
    if (col < n && w > kWeightDropTol) atoms.push_back({zs[col], w});
  res.experiment = make_experiment(std::move(atoms), false);
  res.value = sol.value;
  res.support_size = res.experiment.support_size();
  res.degenerate = res.support_size == 1;
  for (const auto& a : res.experiment.atoms)
    res.active_pieces.push_back(m.envelope.piece_index(a.z));
  return res;
}

}  // namespace epdscreen
