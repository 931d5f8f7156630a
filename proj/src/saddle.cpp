#include "epdscreen/saddle.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

#include "epdscreen/analysis.hpp"

namespace epdscreen {

namespace {

struct Packing {
  int n_lambda = 0;
  bool mu_top = false;

  int dim() const { return 1 + n_lambda + (mu_top ? 1 : 0); }

  MultiplierVector unpack(const std::vector<double>& x) const {
    MultiplierVector lam;
    lam.mu = x[0];
    lam.lambdas.assign(x.begin() + 1, x.begin() + 1 + n_lambda);
    if (mu_top) lam.mu_top = x[1 + n_lambda];
    return lam;
  }

  std::vector<double> pack(const MultiplierVector& lam) const {
    std::vector<double> x;
    x.push_back(lam.mu);
    x.insert(x.end(), lam.lambdas.begin(), lam.lambdas.end());
    if (mu_top) x.push_back(lam.mu_top);
    return x;
  }
};

void clamp_box(std::vector<double>& x, double hi) {
  for (double& v : x) v = std::clamp(v, 0.0, hi);
}

// Nelder-Mead on the clamped box; used only to polish low-dimensional runs.
void nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                 std::vector<double>& x, double& fx, double hi, int max_iter) {
  const int n = static_cast<int>(x.size());
  std::vector<std::vector<double>> pts(n + 1, x);
  std::vector<double> fv(n + 1);
  for (int i = 0; i < n; ++i) {
    pts[i + 1][i] += std::max(0.05, 0.05 * std::abs(x[i]));
    clamp_box(pts[i + 1], hi);
  }
  for (int i = 0; i <= n; ++i) fv[i] = f(pts[i]);
  std::vector<int> ord(n + 1);
  for (int it = 0; it < max_iter; ++it) {
    for (int i = 0; i <= n; ++i) ord[i] = i;
    std::sort(ord.begin(), ord.end(), [&](int a, int b) { return fv[a] < fv[b]; });
    const int best = ord[0], worst = ord[n], second = ord[n - 1];
    if (fv[worst] - fv[best] < 1e-13 * (1 + std::abs(fv[best]))) break;
    std::vector<double> centroid(n, 0.0);
    for (int i = 0; i <= n; ++i)
      if (i != worst)
        for (int k = 0; k < n; ++k) centroid[k] += pts[i][k] / n;
    auto blend = [&](double t) {
      std::vector<double> p(n);
      for (int k = 0; k < n; ++k) p[k] = centroid[k] + t * (centroid[k] - pts[worst][k]);
      clamp_box(p, hi);
      return p;
    };
    auto refl = blend(1.0);
    const double fr = f(refl);
    if (fr < fv[best]) {
      auto exp_ = blend(2.0);
      const double fe = f(exp_);
      if (fe < fr) {
        pts[worst] = exp_;
        fv[worst] = fe;
      } else {
        pts[worst] = refl;
        fv[worst] = fr;
      }
    } else if (fr < fv[second]) {
      pts[worst] = refl;
      fv[worst] = fr;
    } else {
      auto con = blend(fr < fv[worst] ? 0.5 : -0.5);
      const double fc = f(con);
      if (fc < std::min(fr, fv[worst])) {
        pts[worst] = con;
        fv[worst] = fc;
      } else {
        for (int i = 0; i <= n; ++i) {
          if (i == best) continue;
          for (int k = 0; k < n; ++k) pts[i][k] = 0.5 * (pts[i][k] + pts[best][k]);
          fv[i] = f(pts[i]);
        }
      }
    }
  }
  for (int i = 0; i <= n; ++i) {
    if (fv[i] < fx) {
      fx = fv[i];
      x = pts[i];
    }
  }
}

}  // namespace

SaddleResult outer_optimize(const ScreeningInstance& inst, const SaddleConfig& config) {
  inst.validate();
  Packing pk{inst.n() - 1, config.use_mu_top};

  const MultiplierVector init = myerson_multipliers(inst);
  double lam_bar = config.lambda_bar;
  if (lam_bar <= 0) {
    lam_bar = init.mu;
    for (double l : init.lambdas) lam_bar = std::max(lam_bar, l);
    lam_bar *= 2.0;
  }

  auto f = [&](const std::vector<double>& x) { return dual_value(inst, pk.unpack(x)); };

  std::vector<double> x = pk.pack(init);
  clamp_box(x, lam_bar);
  double fx = f(x);

  SaddleResult res;
  res.trace.push_back(fx);
  const int dim = pk.dim();
  double t_warm = config.initial_step;
  std::vector<double> x_best = x;
  double f_best = fx;
  std::vector<double> best_hist{fx};
  std::vector<double> accept_hist{fx};
  std::vector<double> x_prev, g_prev;
  bool stopped = false;
  int iter = 0;
  for (; iter < config.max_iterations && !stopped; ++iter) {
    // central finite differences; the smoothing also regularizes the kinks
    // of the piecewise-smooth dual, which a raw subgradient does not
    std::vector<double> g(dim);
    for (int i = 0; i < dim; ++i) {
      const double h = config.fd_step * (1 + std::abs(x[i]));
      std::vector<double> xp = x, xm = x;
      xp[i] = std::clamp(xp[i] + h, 0.0, lam_bar);
      xm[i] = std::clamp(xm[i] - h, 0.0, lam_bar);
      const double denom = xp[i] - xm[i];
      g[i] = denom > 0 ? (f(xp) - f(xm)) / denom : 0.0;
    }
    // projected-gradient norm at unit step
    double pg = 0;
    for (int i = 0; i < dim; ++i) {
      const double d = x[i] - std::clamp(x[i] - g[i], 0.0, lam_bar);
      pg += d * d;
    }
    res.grad_norm = std::sqrt(pg);
    if (res.grad_norm < config.grad_tol) {
      res.converged = true;
      break;
    }
    // spectral (Barzilai-Borwein) trial step, else warm start from last accept
    double t = std::min(config.initial_step, 4 * t_warm);
    if (!x_prev.empty()) {
      double sy = 0, ss = 0;
      for (int i = 0; i < dim; ++i) {
        const double s = x[i] - x_prev[i];
        sy += s * (g[i] - g_prev[i]);
        ss += s * s;
      }
      if (sy > 0 && ss > 0) t = std::clamp(ss / sy, 1e-6, 1e3);
    }
    x_prev = x;
    g_prev = g;
    // nonmonotone armijo (reference = worst recent accept) so the spectral
    // step can ride through kinks; the reported trace is the incumbent best
    double f_ref = fx;
    for (std::size_t k = accept_hist.size(); k-- > 0 && k + 8 >= accept_hist.size();)
      f_ref = std::max(f_ref, accept_hist[k]);
    bool accepted = false;
    for (int ls = 0; ls < 50; ++ls) {
      std::vector<double> xn(dim);
      double decrease = 0;
      for (int i = 0; i < dim; ++i) {
        xn[i] = std::clamp(x[i] - t * g[i], 0.0, lam_bar);
        decrease += g[i] * (x[i] - xn[i]);
      }
      const double fn = f(xn);
      if (fn <= f_ref - 1e-4 * decrease) {
        x = std::move(xn);
        fx = fn;
        accept_hist.push_back(fx);
        accepted = true;
        t_warm = t;
        if (fx < f_best) {
          f_best = fx;
          x_best = x;
        }
        res.trace.push_back(f_best);
        // stall window: best-so-far improved by < tol per step over 5 accepts
        best_hist.push_back(std::min(best_hist.back(), fx));
        const std::size_t k = best_hist.size();
        if (k >= 6 &&
            (best_hist[k - 6] - best_hist[k - 1]) < 5 * config.value_tol * (1 + std::abs(fx))) {
          res.converged = true;
          stopped = true;
        }
        break;
      }
      t *= config.backtrack;
    }
    if (!accepted) {
      res.converged = true;  // no descent direction at line-search resolution
      break;
    }
  }
  res.iterations = iter;
  x = x_best;
  fx = f_best;

  if (config.polish && dim <= 4) {
    nelder_mead(f, x, fx, lam_bar, 400 * dim);
    res.trace.push_back(fx);
  }

  // kinks of the piecewise-smooth dual can trap both the gradient loop and the
  // simplex; in low dimension a pattern search over all sign combinations with
  // step halving is cheap and settles the minimum to machine resolution
  if (config.polish && dim <= 3) {
    std::vector<std::vector<double>> dirs;
    std::vector<double> d(dim, -1.0);
    while (true) {
      if (std::any_of(d.begin(), d.end(), [](double v) { return v != 0; }))
        dirs.push_back(d);
      int i = 0;
      for (; i < dim && d[i] == 1.0; ++i) d[i] = -1.0;
      if (i == dim) break;
      d[i] += 1.0;
    }
    std::vector<std::vector<double>> starts = {x, pk.pack(init)};
    for (auto& s : starts) {
      clamp_box(s, lam_bar);
      double fs = f(s);
      for (double step = 0.25 * (1 + lam_bar); step > 1e-10; step *= 0.5) {
        for (bool improved = true; improved;) {
          improved = false;
          for (const auto& dir : dirs) {
            std::vector<double> c(dim);
            bool moved = false;
            for (int i = 0; i < dim; ++i) {
              c[i] = std::clamp(s[i] + step * dir[i], 0.0, lam_bar);
              moved = moved || c[i] != s[i];
            }
            if (!moved) continue;
            const double fc = f(c);
            if (fc < fs - 1e-15) {
              fs = fc;
              s = std::move(c);
              improved = true;
              break;
            }
          }
        }
      }
      if (fs < fx) {
        fx = fs;
        x = s;
      }
    }
    res.trace.push_back(fx);
  }

  res.multipliers = pk.unpack(x);
  res.solution = solve_inner(inst, res.multipliers);
  return res;
}

double lagrangian_value(const ScreeningInstance& inst, const MultiplierVector& lam,
                        const std::vector<Experiment>& experiments) {
  if (static_cast<int>(experiments.size()) != inst.n())
    throw DomainError("lagrangian_value: one experiment per report required");
  double total = 0;
  for (int j = 0; j < inst.n(); ++j) {
    const MFunction m{dual_pieces(inst, j, lam), inst.cost};
    for (const auto& a : experiments[j].atoms) total += a.w * m(a.z);
  }
  return total;
}

SaddleCheckReport saddle_check(const ScreeningInstance& inst, const SaddleResult& result,
                               int n_perturb, double radius, unsigned seed) {
  SaddleCheckReport rep;
  rep.n_perturb = n_perturb;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);

  std::vector<Experiment> base;
  for (const auto& r : result.solution.reports) base.push_back(r.experiment);
  const double l_star = lagrangian_value(inst, result.multipliers, base);

  const int N = inst.n();
  for (int t = 0; t < n_perturb; ++t) {
    // mean-preserving experiment perturbation at a random report
    std::vector<Experiment> pert = base;
    const int j = static_cast<int>(rng() % N);
    Experiment& f = pert[j];
    if (f.support_size() == 1) {
      // split the degenerate atom symmetrically around its mean
      const double h = radius * std::abs(unif(rng));
      const double z = f.atoms[0].z;
      if (z - h > inst.domain.z_lo) {
        f.atoms = {{z - h, 0.5}, {z + h, 0.5}};
      }
    } else {
      const std::size_t i = rng() % f.atoms.size();
      std::size_t k = rng() % f.atoms.size();
      if (k == i) k = (k + 1) % f.atoms.size();
      const double h = radius * unif(rng);
      const double zi = f.atoms[i].z + h;
      // shift the partner to keep the mean fixed
      const double zk = f.atoms[k].z - h * f.atoms[i].w / f.atoms[k].w;
      if (zi > inst.domain.z_lo && zi < inst.domain.z_hi && zk > inst.domain.z_lo &&
          zk < inst.domain.z_hi) {
        f.atoms[i].z = zi;
        f.atoms[k].z = zk;
      }
    }
    const double l_pert = lagrangian_value(inst, result.multipliers, pert);
    rep.worst_experiment_residual = std::max(rep.worst_experiment_residual, l_pert - l_star);

    // nonnegative multiplier perturbation
    MultiplierVector lam = result.multipliers;
    lam.mu = std::max(0.0, lam.mu + radius * unif(rng));
    for (double& l : lam.lambdas) l = std::max(0.0, l + radius * unif(rng));
    if (lam.mu_top > 0) lam.mu_top = std::max(0.0, lam.mu_top + radius * unif(rng));
    const double l_lam = lagrangian_value(inst, lam, base);
    rep.worst_multiplier_residual = std::max(rep.worst_multiplier_residual, l_star - l_lam);
  }
  return rep;
}

std::vector<std::vector<double>> fd_hessian(
    const std::function<double(const std::vector<double>&)>& f,
    const std::vector<double>& x, double step) {
  const int n = static_cast<int>(x.size());
  std::vector<std::vector<double>> h(n, std::vector<double>(n, 0.0));
  auto at = [&](int i, double di, int j, double dj) {
    std::vector<double> y = x;
    y[i] += di;
    y[j] += dj;
    return f(y);
  };
  for (int i = 0; i < n; ++i) {
    for (int j = i; j < n; ++j) {
      double v;
      if (i == j) {
        v = (at(i, step, i, 0) - 2 * f(x) + at(i, -step, i, 0)) / (step * step);
      } else {
        v = (at(i, step, j, step) - at(i, step, j, -step) - at(i, -step, j, step) +
             at(i, -step, j, -step)) /
            (4 * step * step);
      }
      h[i][j] = h[j][i] = v;
    }
  }
  return h;
}

HessianReport myerson_hessian_check(double gamma_hat, int n_grid, double step) {
  if (!(gamma_hat > 0) || n_grid < 2)
    throw DomainError("myerson_hessian_check needs gamma_hat > 0 and n_grid >= 2");
  // midpoint discretization of theta in [0,1]; lambda piecewise constant
  std::vector<double> thetas(n_grid), lam(n_grid);
  for (int i = 0; i < n_grid; ++i) {
    thetas[i] = (i + 0.5) / n_grid;
    lam[i] = 1 - thetas[i];
  }
  auto r_of = [&](const std::vector<double>& l) {
    double total = 0;
    for (int i = 0; i < n_grid; ++i)
      total += revenue_integrand(thetas[i], l[i], gamma_hat) / n_grid;
    return total;
  };
  const auto h = fd_hessian(r_of, lam, step);
  Eigen::MatrixXd m(n_grid, n_grid);
  for (int i = 0; i < n_grid; ++i)
    for (int j = 0; j < n_grid; ++j) m(i, j) = h[i][j];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(m);
  HessianReport rep;
  for (int i = 0; i < n_grid; ++i) rep.eigenvalues.push_back(solver.eigenvalues()[i]);
  rep.min_eigenvalue = rep.eigenvalues.front();
  rep.max_eigenvalue = rep.eigenvalues.back();
  return rep;
}

}  // namespace epdscreen
