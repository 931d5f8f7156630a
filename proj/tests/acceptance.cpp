// acceptance gate: one line per criterion, exit nonzero on any failure
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include "epdscreen/analysis.hpp"
#include "epdscreen/concavify.hpp"
#include "epdscreen/epd.hpp"
#include "epdscreen/saddle.hpp"
#include "epdscreen/screening.hpp"

using namespace epdscreen;

namespace {

MFunction random_kinks_m(std::mt19937& rng, int d, double gamma) {
  std::uniform_real_distribution<double> ub(0.3, 3.0);
  std::uniform_real_distribution<double> uk(std::log(0.2), std::log(5.0));
  std::vector<double> kinks;
  for (int i = 0; i < d; ++i) kinks.push_back(std::exp(uk(rng)));
  std::sort(kinks.begin(), kinks.end());
  std::vector<AffinePiece> actions = {{0.0, -ub(rng)}};
  for (double k : kinks) {
    const AffinePiece& prev = actions.back();
    const double slope = prev.slope + ub(rng);
    actions.push_back({prev.at(k) - slope * k, slope});
  }
  return {upper_envelope(actions), CostSpec::entropy(gamma)};
}

// 1: randomized support-bound sweep per family
bool crit1(std::string& detail) {
  const CostSpec cost = CostSpec::entropy(0.5);
  const auto mon = verify_support_bound(FamilyTag::Monitoring, cost, 10000, 101);
  const auto scr = verify_support_bound(FamilyTag::Screening, cost, 10000, 103);
  const auto qual = verify_support_bound(FamilyTag::Quality, cost, 10000, 107);
  std::ostringstream os;
  os << "max support mon=" << mon.max_support << " scr=" << scr.max_support
     << " qual=" << qual.max_support << ", violations "
     << mon.violations + scr.violations + qual.violations;
  detail = os.str();
  return mon.violations == 0 && scr.violations == 0 && qual.violations == 0 &&
         mon.max_support == 2 && scr.max_support == 3 && qual.max_support <= 4;
}

// 2: closed-form identity and numeric endpoint match
bool crit2(std::string& detail) {
  std::mt19937 rng(211);
  std::uniform_real_distribution<double> ul(std::log(1e-2), std::log(10.0));
  std::uniform_real_distribution<double> uk(std::log(0.2), std::log(5.0));
  std::uniform_real_distribution<double> ug(std::log(0.05), std::log(5.0));
  double worst_ratio = 0;
  for (int t = 0; t < 1000; ++t) {
    const auto cf =
        closed_form_single_kink(std::exp(ul(rng)), std::exp(uk(rng)), std::exp(ug(rng)));
    worst_ratio = std::max(worst_ratio,
                           std::abs(cf.b / cf.a - std::exp(cf.eta)) / std::exp(cf.eta));
  }
  double worst_atom = 0;
  std::uniform_real_distribution<double> un(0.3, 2.5);
  std::uniform_real_distribution<double> un_k(0.5, 2.0);
  int checked = 0;
  for (int t = 0; t < 2000 && checked < 100; ++t) {
    const double db = un(rng), kap = un_k(rng), g = 0.25 + 0.5 * un(rng);
    const auto cf = closed_form_single_kink(db, kap, g);
    if (cf.a >= 1.0 || cf.b <= 1.0) continue;  // mean outside the merged span
    ++checked;
    std::vector<AffinePiece> actions = {{0.0, 0.0}, {-db * kap, db}};
    const MFunction m{upper_envelope(actions), CostSpec::entropy(g)};
    const auto r = concavify_at_mean(m, 1.0, 20001);
    if (r.support_size != 2) {
      detail = "numeric solution not binary on a straddling instance";
      return false;
    }
    worst_atom = std::max({worst_atom, std::abs(r.experiment.atoms[0].z - cf.a),
                           std::abs(r.experiment.atoms[1].z - cf.b)});
  }
  if (checked < 100) {
    detail = "too few straddling instances drawn";
    return false;
  }
  std::ostringstream os;
  os << "max rel b/a error " << worst_ratio << ", max atom error " << worst_atom;
  detail = os.str();
  return worst_ratio <= 1e-10 && worst_atom <= 5e-4;
}

// 3: universal allocation curve properties
bool crit3(std::string& detail) {
  std::vector<double> grid;
  for (int i = 0; i <= 1200; ++i) grid.push_back(6.0 * i / 1200.0);
  const auto c = logistic_gap(grid);
  bool increasing = true, below = true;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (i > 0 && !(c.w[i] > c.w[i - 1])) increasing = false;
    if (grid[i] > 0 && !(c.w[i] < c.logistic[i])) below = false;
  }
  const bool zero_limit = std::abs(w_universal(1e-12) - 0.5) <= 1e-6;
  std::ostringstream os;
  os << "argmax " << c.argmax << ", max gap " << c.max_gap;
  detail = os.str();
  return zero_limit && increasing && below && c.argmax >= 1.4 && c.argmax <= 2.2 &&
         c.max_gap >= 0.08 && c.max_gap <= 0.11;
}

// 4: grid-LP oracle equivalence
bool crit4(std::string& detail) {
  std::mt19937 rng(431);
  std::uniform_int_distribution<int> ud(1, 2);
  double worst = 0;
  for (int t = 0; t < 1000; ++t) {
    const MFunction m = random_kinks_m(rng, ud(rng), 0.5);
    const auto fast = concavify_at_mean(m, 1.0);
    const auto oracle = concavify_lp_oracle(m, 1.0, 10001);
    worst = std::max(worst,
                     std::abs(fast.value - oracle.value) / (1 + std::abs(fast.value)));
  }
  std::ostringstream os;
  os << "max relative value gap " << worst;
  detail = os.str();
  return worst <= 5e-5;
}

// 5: no atom near an interior kink across the sweeps
bool crit5(std::string& detail) {
  const CostSpec cost = CostSpec::entropy(0.5);
  double min_dist = 1e300;
  for (FamilyTag tag : {FamilyTag::Monitoring, FamilyTag::Screening, FamilyTag::Quality,
                        FamilyTag::Capacity}) {
    const auto rep = verify_support_bound(tag, cost, 4000, 501);
    min_dist = std::min(min_dist, rep.min_kink_distance);
  }
  std::ostringstream os;
  os << "min atom-kink distance " << min_dist << " grid steps";
  detail = os.str();
  return min_dist > 1.0;
}

// 6: two-type welfare signs over the parameter grid
bool crit6(std::string& detail) {
  const double v_H = 10.0 / 11.0;
  double min_benefit = 1e300, worst_below = 0, worst_above = 0;
  for (int i = 1; i <= 100; ++i) {
    for (int j = 1; j <= 100; ++j) {
      TwoTypeParams p;
      p.pi_H = i / 101.0;
      p.v_L = v_H * j / 101.0;
      p.v_H = v_H;
      p.gamma = 0.5;
      const auto cell = twotype_solve(p);
      min_benefit = std::min(min_benefit, cell.benefit);
      if (p.v_L < p.pi_H * v_H)
        worst_below = std::min(worst_below, cell.welfare_delta);
      else if (p.v_L > p.pi_H * v_H)
        worst_above = std::max(worst_above, cell.welfare_delta);
    }
  }
  std::ostringstream os;
  os << "min benefit " << min_benefit << ", welfare below/above " << worst_below << "/"
     << worst_above;
  detail = os.str();
  return min_benefit >= -1e-9 && worst_below >= -1e-6 && worst_above <= 1e-6;
}

// 7: investigation-region width scaling in gamma
bool crit7(std::string& detail) {
  const double v_H = 10.0 / 11.0;
  const auto res =
      region_width(0.6, v_H, {0.02, 0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 64.0});
  bool single = true;
  for (std::size_t i = 0; i < res.widths.size(); ++i)
    if (res.widths[i] > 0 && !res.single_interval[i]) single = false;
  const double w_small = res.widths.front();
  const double w_huge = res.widths.back();
  const double w_mid = res.widths[res.widths.size() - 2];  // gamma = 4
  std::ostringstream os;
  os << "slope " << res.loglog_slope << ", width(0.02) " << w_small << ", width(64) "
     << w_huge;
  detail = os.str();
  return std::abs(res.loglog_slope + 1.0) <= 0.15 && single && w_small >= 0.8 * v_H &&
         (w_huge == 0.0 || w_huge <= 0.05 * w_mid);
}

// 8: N-type refinement of the myerson-multiplier solution
bool crit8(std::string& detail) {
  const auto study = convergence_study(0.1, 0.9, 0.5, {10, 20, 50, 100, 200});
  int max_support = 0;
  double worst_step = 0;
  for (const auto& e : study.entries) {
    max_support = std::max(max_support, e.max_support);
    if (e.N >= 100) worst_step = std::max(worst_step, e.step_mismatch);
  }
  const auto& es = study.entries;
  const bool shrinking =
      es[4].sup_distance_prev <= es[3].sup_distance_prev + 1e-12 &&
      es[3].sup_distance_prev <= es[2].sup_distance_prev + 1e-12;
  std::ostringstream os;
  os << "max support " << max_support << ", step mismatch (N>=100) " << worst_step
     << ", sup distances " << es[2].sup_distance_prev << " " << es[3].sup_distance_prev
     << " " << es[4].sup_distance_prev;
  detail = os.str();
  return max_support <= 3 && shrinking && worst_step <= 1e-3;
}

// 9: outer optimization at N=80
bool crit9(std::string& detail) {
  const auto inst =
      ScreeningInstance::uniform_grid(80, 0.1, 0.9, CostSpec::entropy(0.5), 2.0);
  const auto myerson = myerson_multipliers(inst);
  const auto my_sol = solve_inner(inst, myerson);
  const auto res = outer_optimize(inst);

  const double theta0 = myerson_benchmark(inst).theta0;
  auto k_argmax = [&](const MechanismSolution& sol) {
    int best = 0;
    for (int j = 1; j < inst.n(); ++j)
      if (sol.K[j] > sol.K[best]) best = j;
    return inst.thetas[best];
  };
  const double th_opt = k_argmax(res.solution);
  const double th_my = k_argmax(my_sol);

  double max_dev = 0;
  int max_support = 0;
  for (const auto& r : res.solution.reports) {
    if (std::isfinite(r.kappa_p)) max_dev = std::max(max_dev, std::abs(r.kappa_p - 1));
    max_support = std::max(max_support, r.support);
  }
  const bool lower = res.solution.dual_value <= my_sol.dual_value + 1e-9;
  const bool kappa_moves = max_dev > 0.01;
  const bool k_closer = std::abs(th_opt - theta0) < std::abs(th_my - theta0);
  std::ostringstream os;
  os << "dual " << res.solution.dual_value << " vs myerson " << my_sol.dual_value
     << ", max|kappa_p-1| " << max_dev << ", K argmax " << th_opt << " vs " << th_my
     << " (theta0 " << theta0 << "), max support " << max_support;
  detail = os.str();
  return lower && kappa_moves && k_closer && max_support <= 3;
}

// 10: saddle diagnostics on random two-type instances
bool crit10(std::string& detail) {
  // ten instances across the investigation region, where the saddle is
  // interior; in the exclusion and ternary regimes the dual minimum sits on a
  // kink of the multiplier polytope and the vertex experiments are not the
  // saddle mixture
  const double v_h = 10.0 / 11.0;
  struct Params {
    double v_l, pi_h, gamma;
  };
  const Params grid[] = {{0.35, 0.60, 0.50}, {0.40, 0.60, 0.50}, {0.44, 0.60, 0.50},
                         {0.48, 0.60, 0.50}, {0.52, 0.60, 0.50}, {0.40, 0.50, 0.50},
                         {0.45, 0.70, 0.50}, {0.50, 0.65, 0.50}, {0.42, 0.60, 0.25},
                         {0.46, 0.55, 0.35}};
  double worst = 0;
  bool duality = true;
  for (const auto& p : grid) {
    ScreeningInstance inst;
    inst.thetas = {p.v_l, v_h};
    inst.masses = {1 - p.pi_h, p.pi_h};
    inst.pbar = 1.0;
    inst.cost = CostSpec::entropy(p.gamma);
    const auto res = outer_optimize(inst);
    const auto rep = saddle_check(inst, res, 1000, 1e-3);
    worst = std::max({worst, rep.worst_experiment_residual, rep.worst_multiplier_residual});
    if (!check_primal(inst, res.solution).weak_duality) duality = false;
  }
  std::ostringstream os;
  os << "worst saddle residual " << worst << ", weak duality "
     << (duality ? "holds" : "violated");
  detail = os.str();
  return worst <= 1e-6 && duality;
}

// 11: limited-liability contrast
bool crit11(std::string& detail) {
  std::mt19937 rng(1103);
  std::uniform_real_distribution<double> um(0.0, 1.5);
  const auto inst =
      ScreeningInstance::uniform_grid(5, 0.1, 0.9, CostSpec::entropy(0.5), 2.0);
  int max_kinks = 0, max_support = 0;
  for (int t = 0; t < 1000; ++t) {
    MultiplierVector lam;
    lam.lambdas = {um(rng), um(rng), um(rng), um(rng)};
    lam.mu = um(rng);
    for (int j = 0; j < inst.n(); ++j) {
      const PolicyEnvelope env = dual_pieces(inst, j, lam, false);
      max_kinks = std::max(max_kinks, static_cast<int>(env.breakpoints.size()));
      const auto r = concavify_at_mean(MFunction{env, inst.cost}, 1.0);
      max_support = std::max(max_support, r.support_size);
    }
  }
  std::ostringstream os;
  os << "max kinks " << max_kinks << ", max support " << max_support;
  detail = os.str();
  return max_kinks <= 1 && max_support <= 2;
}

// 12: second-order check at the myerson schedule
bool crit12(std::string& detail) {
  const auto rep = myerson_hessian_check(0.5);
  std::ostringstream os;
  os << "max eigenvalue " << rep.max_eigenvalue;
  detail = os.str();
  return rep.max_eigenvalue > 0;
}

}  // namespace

int main(int argc, char** argv) {
  using Criterion = bool (*)(std::string&);
  const Criterion criteria[] = {crit1, crit2, crit3, crit4,  crit5,  crit6,
                                crit7, crit8, crit9, crit10, crit11, crit12};
  int only = 0;
  if (argc > 1) {
    only = std::atoi(argv[1]);
    if (only < 1 || only > 12) {
      std::cerr << "usage: acceptance [1-12]\n";
      return 2;
    }
  }
  bool all_pass = true;
  for (int id = 1; id <= 12; ++id) {
    if (only && id != only) continue;
    std::string detail;
    bool pass = false;
    try {
      pass = criteria[id - 1](detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
    }
    std::cout << "criterion " << id << ": " << (pass ? "PASS" : "FAIL")
              << " — " << detail << std::endl;
    all_pass = all_pass && pass;
  }
  return all_pass ? 0 : 1;
}
