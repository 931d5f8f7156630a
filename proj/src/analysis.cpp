#include "epdscreen/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace epdscreen {

double w_universal(double eta) {
  if (eta < 0) throw DomainError("w_universal requires eta >= 0");
  if (eta > 700) return 1.0;
  if (eta < 1e-8) return 0.5 + eta / 6.0;
  return (std::expm1(eta) - eta) / (std::expm1(eta) + std::expm1(-eta));
}

LogisticGapCurve logistic_gap(const std::vector<double>& eta_grid) {
  LogisticGapCurve c;
  for (double eta : eta_grid) {
    if (eta < 0) throw DomainError("logistic_gap requires a nonnegative grid");
    const double w = w_universal(eta);
    const double l = 1.0 / (1.0 + std::exp(-eta));
    c.eta.push_back(eta);
    c.w.push_back(w);
    c.logistic.push_back(l);
    c.gap.push_back(l - w);
    if (l - w > c.max_gap) {
      c.max_gap = l - w;
      c.argmax = eta;
    }
  }
  return c;
}

double normalized_k(double eta) {
  if (eta < 0) throw DomainError("normalized_k requires eta >= 0");
  if (eta < 1e-10) return 0.0;
  const double w = w_universal(eta);
  const double log_a = std::log(-std::expm1(-eta) / eta);
  const double log_b = eta > 30 ? eta - std::log(eta) + std::log1p(-std::exp(-eta))
                                : std::log(std::expm1(eta) / eta);
  return -w * log_a - (1 - w) * log_b;
}

double eta_continuum(double lambda_value, double theta, double gamma_hat) {
  if (!(gamma_hat > 0)) throw DomainError("eta_continuum requires gamma_hat > 0");
  return lambda_value * theta / (2 * gamma_hat);
}

double revenue_integrand(double theta, double lambda_value, double gamma_hat) {
  const double phi = 2 * theta - 1;  // uniform types on [0,1]
  if (lambda_value <= 0) return std::max(phi, 0.0);  // Myerson allocation
  const double eta = eta_continuum(lambda_value, theta, gamma_hat);
  return phi * w_universal(eta) - 2 * gamma_hat * normalized_k(eta);
}

double revenue_functional(const std::function<double(double)>& lambda_schedule,
                          double gamma_hat, int quadrature_n) {
  int n = std::max(quadrature_n, 11);
  if (n % 2 == 0) ++n;  // Simpson needs an odd point count
  const double h = 1.0 / (n - 1);
  double total = 0;
  for (int i = 0; i < n; ++i) {
    const double theta = i * h;
    const double f = revenue_integrand(theta, lambda_schedule(theta), gamma_hat);
    const double coef = (i == 0 || i == n - 1) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    total += coef * f;
  }
  return total * h / 3.0;
}

SweepCell twotype_solve(const TwoTypeParams& params) {
  if (!(params.v_L > 0) || !(params.v_L < params.v_H))
    throw DomainError("twotype_solve requires 0 < v_L < v_H");
  if (!(params.pi_H > 0) || !(params.pi_H < 1))
    throw DomainError("twotype_solve requires pi_H in (0,1)");
  if (!(params.pbar > params.v_H))
    throw DomainError("twotype_solve requires pbar > v_H");

  ScreeningInstance inst;
  inst.thetas = {params.v_L, params.v_H};
  inst.masses = {1 - params.pi_H, params.pi_H};
  inst.pbar = params.pbar;
  inst.cost = CostSpec::entropy(params.gamma);

  SaddleConfig cfg;
  cfg.use_mu_top = true;
  const SaddleResult saddle = outer_optimize(inst, cfg);
  const MechanismSolution& sol = saddle.solution;

  SweepCell cell;
  cell.params = params;
  cell.dual_value = sol.dual_value;

  const double pi_L = 1 - params.pi_H;
  const double w_eff = params.pi_H * params.v_H + pi_L * params.v_L;
  cell.u_s_ni = std::max(params.pi_H * params.v_H, params.v_L);
  cell.w_ni = params.v_L < params.pi_H * params.v_H
                  ? params.pi_H * params.v_H
                  : w_eff;  // tie resolved toward serving both types

  // the degenerate experiment replicates the no-information mechanism, so the
  // seller investigates only when strictly profitable; at exclusion ties the
  // dual minimum sits on a kink of the multiplier polytope and the vertex
  // experiment it reports carries cost without any revenue gain
  if (sol.dual_value <= cell.u_s_ni + 1e-7 * (1 + std::abs(cell.u_s_ni))) {
    cell.support_class = 1;
    cell.q_star = params.v_L < params.pi_H * params.v_H ? 0.0 : 1.0;
    cell.investigation_cost = 0;
    cell.w_star = cell.w_ni;
  } else {
    for (const auto& r : sol.reports)
      cell.support_class = std::max(cell.support_class, r.support);
    cell.q_star = sol.q[0];
    cell.investigation_cost = sol.total_cost;
    cell.w_star = pi_L * params.v_L * sol.q[0] + params.pi_H * params.v_H * sol.q[1] -
                  sol.total_cost;
  }
  cell.benefit = (cell.dual_value - cell.u_s_ni) / w_eff;
  cell.welfare_delta = (cell.w_star - cell.w_ni) / w_eff;
  return cell;
}

RegionWidthResult region_width(double pi_H, double v_H, std::vector<double> gammas,
                               double scan_step_rel) {
  if (gammas.empty()) throw DomainError("region_width needs at least one gamma");
  for (std::size_t i = 1; i < gammas.size(); ++i)
    if (!(gammas[i] > gammas[i - 1]))
      throw DomainError("region_width gammas must be increasing and positive");
  RegionWidthResult res;
  const double step = scan_step_rel * v_H;

  for (double gamma : gammas) {
    auto investigates = [&](double v_L) {
      TwoTypeParams p;
      p.v_L = v_L;
      p.v_H = v_H;
      p.pi_H = pi_H;
      p.gamma = gamma;
      p.pbar = std::max(1.0, 1.2 * v_H);
      return twotype_solve(p).support_class > 1;
    };
    std::vector<double> grid;
    std::vector<char> member;
    int transitions = 0;
    for (double v = step; v < v_H - 0.5 * step; v += step) {
      grid.push_back(v);
      member.push_back(investigates(v) ? 1 : 0);
      const std::size_t k = member.size();
      if (k >= 2 && member[k - 1] != member[k - 2]) ++transitions;
    }
    int first = -1, last = -1;
    for (std::size_t i = 0; i < member.size(); ++i) {
      if (member[i]) {
        if (first < 0) first = static_cast<int>(i);
        last = static_cast<int>(i);
      }
    }
    res.gammas.push_back(gamma);
    res.single_interval.push_back(transitions <= 2);
    if (first < 0) {
      res.widths.push_back(0.0);
      continue;
    }
    // bisect the two edges to sharpen the width beyond grid resolution
    auto edge = [&](double lo, double hi, bool rising) {
      for (int it = 0; it < 30 && hi - lo > 1e-6 * v_H; ++it) {
        const double mid = 0.5 * (lo + hi);
        const bool in = investigates(mid);
        (in == rising ? hi : lo) = mid;
      }
      return 0.5 * (lo + hi);
    };
    const double left =
        first == 0 ? grid[0] : edge(grid[first - 1], grid[first], true);
    const double right = last + 1 == static_cast<int>(grid.size())
                             ? grid[last]
                             : edge(grid[last], grid[last + 1], false);
    res.widths.push_back(std::max(right - left, 0.0));
  }

  // log-log regression over the largest three gammas with nonzero width
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < res.gammas.size(); ++i)
    if (res.widths[i] > 0) pts.push_back({std::log(res.gammas[i]), std::log(res.widths[i])});
  if (pts.size() > 3) pts.erase(pts.begin(), pts.end() - 3);
  if (pts.size() >= 2) {
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (auto [x, y] : pts) {
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double n = static_cast<double>(pts.size());
    res.loglog_slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  }
  return res;
}

namespace {

// piecewise-constant interpolation of a type-grid schedule (nearest cell)
double step_interp(const std::vector<double>& thetas, const std::vector<double>& q,
                   double t) {
  const auto it = std::upper_bound(thetas.begin(), thetas.end(), t);
  if (it == thetas.begin()) return q.front();
  if (it == thetas.end()) return q.back();
  const std::size_t i = it - thetas.begin();
  return t - thetas[i - 1] < thetas[i] - t ? q[i - 1] : q[i];
}

}  // namespace

ConvergenceStudy convergence_study(double theta_lo, double theta_hi, double gamma_hat,
                                   const std::vector<int>& n_list) {
  for (std::size_t i = 1; i < n_list.size(); ++i)
    if (n_list[i] <= n_list[i - 1])
      throw DomainError("convergence_study N list must be increasing");
  ConvergenceStudy study;
  const double pbar = std::max(1.0, 1.2 * theta_hi);

  for (int N : n_list) {
    ScreeningInstance inst =
        ScreeningInstance::uniform_grid(N, theta_lo, theta_hi, CostSpec::entropy(gamma_hat), pbar);
    const MultiplierVector lam = myerson_multipliers(inst);
    const MechanismSolution sol = solve_inner(inst, lam);
    const MyersonBenchmark bench = myerson_benchmark(inst);
    study.theta0 = bench.theta0;

    ConvergenceEntry e;
    e.N = N;
    e.thetas = inst.thetas;
    e.q = sol.q;
    e.K = sol.K;
    for (const auto& r : sol.reports) {
      e.support.push_back(r.support);
      e.max_support = std::max(e.max_support, r.support);
    }
    for (int j = 0; j < N; ++j)
      if (sol.reports[j].support == 1)
        e.step_mismatch = std::max(e.step_mismatch, std::abs(sol.q[j] - bench.q[j]));
    for (int j = 0; j + 1 < N; ++j)
      e.rent_integral += 0.5 * (sol.q[j] + sol.q[j + 1]) * (inst.thetas[j + 1] - inst.thetas[j]);
    e.rent_top = sol.U.back();

    if (!study.entries.empty()) {
      const ConvergenceEntry& prev = study.entries.back();
      const int fine = 4001;
      double sup = 0;
      for (int i = 0; i < fine; ++i) {
        const double t = theta_lo + (theta_hi - theta_lo) * i / (fine - 1);
        sup = std::max(sup, std::abs(step_interp(e.thetas, e.q, t) -
                                     step_interp(prev.thetas, prev.q, t)));
      }
      e.sup_distance_prev = sup;
    } else {
      e.sup_distance_prev = std::numeric_limits<double>::quiet_NaN();
    }
    study.entries.push_back(std::move(e));
  }
  return study;
}

}  // namespace epdscreen
