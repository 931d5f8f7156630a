#include "epdscreen/screening.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace epdscreen {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

void ScreeningInstance::validate() const {
  const int N = n();
  if (N < 1) throw DomainError("screening instance needs at least one type");
  if (static_cast<int>(masses.size()) != N)
    throw DomainError("thetas and masses must have equal length");
  double total = 0;
  for (int j = 0; j < N; ++j) {
    if (!(thetas[j] > 0)) throw DomainError("types must be positive");
    if (j > 0 && !(thetas[j] > thetas[j - 1]))
      throw DomainError("types must be strictly increasing");
    if (!(masses[j] > 0)) throw DomainError("masses must be positive");
    total += masses[j];
  }
  if (std::abs(total - 1.0) > 1e-12) throw DomainError("masses must sum to one");
  if (!(pbar > thetas.back())) throw DomainError("transfer cap must exceed the top type");
}

ScreeningInstance ScreeningInstance::uniform_grid(int N, double lo, double hi,
                                                  CostSpec cost, double pbar) {
  if (N < 1 || !(hi > lo) || !(lo > 0))
    throw DomainError("uniform grid needs N >= 1 and 0 < lo < hi");
  ScreeningInstance inst;
  inst.cost = std::move(cost);
  inst.pbar = pbar;
  inst.dist = DistTag::Uniform;
  inst.theta_lo = lo;
  inst.theta_hi = hi;
  for (int j = 0; j < N; ++j) {
    inst.thetas.push_back(N == 1 ? 0.5 * (lo + hi) : lo + (hi - lo) * j / (N - 1));
    inst.masses.push_back(1.0 / N);
  }
  inst.validate();
  return inst;
}

void MultiplierVector::validate(double lambda_bar) const {
  auto check = [&](double v) {
    if (!(v >= 0) || v > lambda_bar)
      throw DomainError("multipliers must lie in [0, lambda_bar]");
  };
  for (double l : lambdas) check(l);
  check(mu);
  check(mu_top);
}

double virtual_surplus(const ScreeningInstance& inst, int j) {
  if (inst.dist != DistTag::Uniform)
    throw DomainError("virtual surplus needs a tagged type distribution");
  // uniform on [lo, hi]: Phi(theta) = theta - (hi - theta) = 2 theta - hi
  return 2 * inst.thetas[j] - inst.theta_hi;
}

DualCoefficients dual_coefficients(const ScreeningInstance& inst, int j,
                                   const MultiplierVector& lam) {
  const int N = inst.n();
  const double lam_prev = lam.lambda(j);      // lambda_{j-1} with lambda_0 = mu
  const double lam_next = j + 1 < N ? lam.lambda(j + 1) : 0.0;
  const double theta_next = j + 1 < N ? inst.thetas[j + 1] : 0.0;
  DualCoefficients c;
  c.a0 = lam_prev * inst.thetas[j];
  c.a1 = -lam_next * theta_next;
  c.b0 = inst.masses[j] - lam_prev;
  c.b1 = lam_next;
  if (j == N - 1 && lam.mu_top > 0) {
    // top IR contributes mu_top * (theta_N x - p) at the top report
    c.a0 += lam.mu_top * inst.thetas[j];
    c.b0 -= lam.mu_top;
  }
  return c;
}

PolicyEnvelope dual_pieces(const ScreeningInstance& inst, int j,
                           const MultiplierVector& lam, bool limited_liability) {
  const DualCoefficients c = dual_coefficients(inst, j, lam);
  std::vector<AffinePiece> actions;
  std::vector<int> labels;
  if (limited_liability) {
    // corner actions (x, p) in {0,1} x {0, pbar}; label bit0 = x, bit1 = p
    for (int px = 0; px < 2; ++px) {
      for (int pp = 0; pp < 2; ++pp) {
        actions.push_back({px * c.a0 + pp * inst.pbar * c.b0,
                           px * c.a1 + pp * inst.pbar * c.b1});
        labels.push_back(px + 2 * pp);
      }
    }
  } else {
    // transfer pinned by the envelope: only the allocation margin remains
    actions.push_back({0, 0});
    actions.push_back({c.a0, c.a1});
    labels = {0, 1};
  }
  return upper_envelope(actions, inst.domain, labels);
}

namespace {

Region classify(int support) {
  if (support >= 3) return Region::Ternary;
  return support == 2 ? Region::Binary : Region::Degenerate;
}

double margin_root(double c0, double c1, const Domain& dom) {
  if (c1 == 0) return kNaN;
  const double z = -c0 / c1;
  return (z > dom.z_lo && z < dom.z_hi) ? z : kNaN;
}

}  // namespace

MechanismSolution solve_inner(const ScreeningInstance& inst, const MultiplierVector& lam) {
  inst.validate();
  const int N = inst.n();
  MechanismSolution sol;
  sol.reports.resize(N);
  sol.q.assign(N, 0.0);
  sol.U.assign(N, 0.0);
  sol.K.assign(N, 0.0);
  sol.I.assign(N, 0);

  for (int j = 0; j < N; ++j) {
    const DualCoefficients c = dual_coefficients(inst, j, lam);
    MFunction m{dual_pieces(inst, j, lam), inst.cost};
    ConcavifyResult r = concavify_at_mean(m, 1.0);
    ReportSolution& rep = sol.reports[j];
    rep.experiment = std::move(r.experiment);
    rep.value = r.value;
    rep.support = r.support_size;
    rep.region = classify(r.support_size);
    rep.kappa_x = margin_root(c.a0, c.a1, inst.domain);
    rep.kappa_p = margin_root(c.b0, c.b1, inst.domain);
    double q = 0, rev = 0;
    for (const auto& atom : rep.experiment.atoms) {
      const double x = c.a0 + c.a1 * atom.z >= 0 ? 1.0 : 0.0;
      const double p = c.b0 + c.b1 * atom.z >= 0 ? inst.pbar : 0.0;
      rep.x.push_back(x);
      rep.p.push_back(p);
      q += atom.w * x;
      rev += atom.w * p;
    }
    sol.q[j] = q;
    sol.K[j] = experiment_cost(inst.cost, rep.experiment);
    sol.I[j] = rep.support - 1;
    sol.dual_value += r.value;
    sol.net_revenue += inst.masses[j] * rev;
    sol.total_cost += sol.K[j];
  }
  sol.net_revenue -= sol.total_cost;

  for (int j = 0; j + 1 < N; ++j) {
    if (sol.q[j + 1] < sol.q[j] - 1e-12) {
      sol.q = iron(sol.q, inst.masses);
      sol.ironed = true;
      break;
    }
  }
  for (int j = 1; j < N; ++j)
    sol.U[j] = sol.U[j - 1] + (inst.thetas[j] - inst.thetas[j - 1]) * sol.q[j - 1];
  return sol;
}

double dual_value(const ScreeningInstance& inst, const MultiplierVector& lam) {
  double v = 0;
  for (int j = 0; j < inst.n(); ++j) {
    MFunction m{dual_pieces(inst, j, lam), inst.cost};
    v += concavify_at_mean(m, 1.0).value;
  }
  return v;
}

MultiplierVector myerson_multipliers(const ScreeningInstance& inst) {
  const int N = inst.n();
  MultiplierVector lam;
  double tail = 0;
  std::vector<double> rev;
  for (int j = N - 1; j >= 1; --j) {
    tail += inst.masses[j];
    rev.push_back(tail);
  }
  lam.lambdas.assign(rev.rbegin(), rev.rend());
  lam.mu = 1.0;  // continues lambda_j = sum of masses above type j
  return lam;
}

MyersonBenchmark myerson_benchmark(const ScreeningInstance& inst) {
  const int N = inst.n();
  MyersonBenchmark b;
  std::vector<double> phi(N);
  for (int j = 0; j < N; ++j) {
    phi[j] = virtual_surplus(inst, j);
    if (j > 0 && !(phi[j] > phi[j - 1]))
      throw DomainError("virtual surplus must be strictly increasing");
  }
  for (int j = 0; j < N; ++j) {
    b.q.push_back(phi[j] >= 0 ? 1.0 : 0.0);
    b.revenue += inst.masses[j] * std::max(phi[j], 0.0);
  }
  // zero-crossing of the linearly interpolated virtual surplus
  auto interp = [&](double t) {
    if (t <= inst.thetas.front()) return phi.front();
    if (t >= inst.thetas.back()) return phi.back();
    const auto it = std::upper_bound(inst.thetas.begin(), inst.thetas.end(), t);
    const int i = static_cast<int>(it - inst.thetas.begin()) - 1;
    const double s = (t - inst.thetas[i]) / (inst.thetas[i + 1] - inst.thetas[i]);
    return phi[i] + s * (phi[i + 1] - phi[i]);
  };
  if (phi.front() >= 0) {
    b.theta0 = inst.thetas.front();
    b.boundary = true;
  } else if (phi.back() <= 0) {
    b.theta0 = inst.thetas.back();
    b.boundary = true;
  } else {
    double lo = inst.thetas.front(), hi = inst.thetas.back();
    while (hi - lo > 1e-10) {
      const double mid = 0.5 * (lo + hi);
      (interp(mid) < 0 ? lo : hi) = mid;
    }
    b.theta0 = 0.5 * (lo + hi);
  }
  return b;
}

std::vector<double> iron(const std::vector<double>& q, const std::vector<double>& masses) {
  const std::size_t n = q.size();
  if (masses.size() != n) throw DomainError("iron: schedule/mass length mismatch");
  // pool adjacent violators with mass weights
  struct Block {
    double mean, w;
    std::size_t count;
  };
  std::vector<Block> blocks;
  for (std::size_t i = 0; i < n; ++i) {
    blocks.push_back({q[i], masses[i], 1});
    while (blocks.size() >= 2 &&
           blocks[blocks.size() - 2].mean >= blocks.back().mean - 1e-15) {
      const Block b = blocks.back();
      blocks.pop_back();
      Block& a = blocks.back();
      a.mean = (a.mean * a.w + b.mean * b.w) / (a.w + b.w);
      a.w += b.w;
      a.count += b.count;
    }
  }
  std::vector<double> out;
  out.reserve(n);
  for (const auto& blk : blocks) out.insert(out.end(), blk.count, blk.mean);
  return out;
}

FeasibilityReport check_primal(const ScreeningInstance& inst, const MechanismSolution& sol) {
  const int N = inst.n();
  FeasibilityReport rep;
  rep.dual_value = sol.dual_value;

  double revenue = 0, cost = 0;
  for (int j = 0; j < N; ++j) {
    const ReportSolution& r = sol.reports[j];
    rep.mean_one_slack = std::max(rep.mean_one_slack, std::abs(r.experiment.mean() - 1.0));
    double rev_j = 0;
    for (std::size_t i = 0; i < r.experiment.atoms.size(); ++i) {
      const double x = r.x[i], p = r.p[i];
      rep.bounds_slack = std::max({rep.bounds_slack, -x, x - 1.0, -p, p - inst.pbar});
      rev_j += r.experiment.atoms[i].w * p;
    }
    revenue += inst.masses[j] * rev_j;
    cost += experiment_cost(inst.cost, r.experiment);
  }
  rep.primal_revenue = revenue - cost;

  for (int j = 0; j + 1 < N; ++j)
    rep.monotonicity_slack = std::max(rep.monotonicity_slack, sol.q[j] - sol.q[j + 1]);

  double u = 0;
  for (int j = 0; j < N; ++j) {
    rep.envelope_slack = std::max(rep.envelope_slack, std::abs(sol.U[j] - u));
    if (j + 1 < N) u += (inst.thetas[j + 1] - inst.thetas[j]) * sol.q[j];
  }

  // adjacent upward IC: type j+1 mimicking report j, reweighted by z
  for (int j = 0; j + 1 < N; ++j) {
    const ReportSolution& r = sol.reports[j];
    double dev = 0;
    for (std::size_t i = 0; i < r.experiment.atoms.size(); ++i) {
      const auto& a = r.experiment.atoms[i];
      dev += a.w * (inst.thetas[j + 1] * r.x[i] - r.p[i]) * a.z;
    }
    rep.ic_slack = std::max(rep.ic_slack, dev - sol.U[j + 1]);
  }

  rep.duality_gap = rep.dual_value - rep.primal_revenue;
  const double tol = 1e-7 * (1 + std::abs(rep.dual_value));
  rep.weak_duality = rep.primal_revenue <= rep.dual_value + tol;
  rep.feasible = rep.mean_one_slack <= 1e-8 && rep.bounds_slack <= 1e-12 &&
                 rep.monotonicity_slack <= 1e-9 && rep.envelope_slack <= 1e-9;
  return rep;
}

}  // namespace epdscreen
