#include "epdscreen/epd.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace epdscreen {

PolicyEnvelope ActionFamily::envelope(Domain domain) const {
  return upper_envelope(actions, domain);
}

ActionFamily build_family(const MonitoringParams& p) {
  ActionFamily fam;
  fam.tag = FamilyTag::Monitoring;
  fam.actions = {{0, 0}, {p.alpha, p.beta}};
  fam.action_labels = {"comply", "punish"};
  return fam;
}

ActionFamily build_family(const ScreeningFamilyParams& p) {
  ActionFamily fam;
  fam.tag = FamilyTag::Screening;
  const AffinePiece a{p.lam_prev * p.theta, -p.lam_next * p.theta_next};
  const AffinePiece b{p.pi - p.lam_prev, p.lam_next};
  for (int x = 0; x < 2; ++x) {
    for (int tp = 0; tp < 2; ++tp) {
      fam.actions.push_back({x * a.intercept + tp * p.pbar * b.intercept,
                             x * a.slope + tp * p.pbar * b.slope});
      fam.action_labels.push_back("x" + std::to_string(x) + "_p" + std::to_string(tp));
    }
  }
  return fam;
}

ActionFamily build_family(const QualityParams& p) {
  ActionFamily fam;
  fam.tag = FamilyTag::Quality;
  const double lam_next = p.pi_H;  // IC multiplier at the low report
  const AffinePiece b{p.pi_L - p.lambda, lam_next};
  const double vq[2] = {p.v_lo, p.v_hi};
  const double cq[2] = {p.c_lo, p.c_hi};
  for (int x = 0; x < 2; ++x) {
    for (int q = 0; q < 2; ++q) {
      for (int tp = 0; tp < 2; ++tp) {
        const double xi = x * (p.lambda * p.theta_L * vq[q] - p.pi_L * cq[q]);
        const double xs = x * (-lam_next * p.theta_H * vq[q]);
        fam.actions.push_back(
            {xi + tp * p.pbar * b.intercept, xs + tp * p.pbar * b.slope});
        fam.action_labels.push_back("x" + std::to_string(x) + (q ? "_qH" : "_qL") +
                                    "_p" + std::to_string(tp));
      }
    }
  }
  return fam;
}

ActionFamily build_family(const CapacityParams& p) {
  ActionFamily fam = build_family(p.base);
  fam.tag = FamilyTag::Capacity;
  // shadow price of capacity reduces the allocate actions' payoff
  for (std::size_t i = 0; i < fam.actions.size(); ++i)
    if (fam.action_labels[i][1] == '1') fam.actions[i].intercept -= p.nu;
  return fam;
}

namespace {

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(std::log(lo), std::log(hi));
  return std::exp(u(rng));
}

ActionFamily random_family(FamilyTag tag, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  switch (tag) {
    case FamilyTag::Monitoring: {
      MonitoringParams p;
      const double kink = log_uniform(rng, 0.05, 20.0);
      p.beta = -log_uniform(rng, 1e-2, 10.0);
      p.alpha = -p.beta * kink;
      return build_family(p);
    }
    case FamilyTag::Screening:
    case FamilyTag::Capacity: {
      ScreeningFamilyParams p;
      p.lam_prev = log_uniform(rng, 1e-3, 10.0);
      p.lam_next = log_uniform(rng, 1e-3, 10.0);
      p.theta = log_uniform(rng, 0.1, 1.0);
      p.theta_next = p.theta * (1 + unif(rng));
      p.pi = unif(rng);
      p.pbar = p.theta_next * (1 + 2 * unif(rng));
      if (tag == FamilyTag::Screening) return build_family(p);
      CapacityParams c{p, log_uniform(rng, 1e-3, 1.0)};
      return build_family(c);
    }
    case FamilyTag::Quality: {
      QualityParams p;
      p.v_lo = log_uniform(rng, 0.2, 1.0);
      p.v_hi = p.v_lo * (1 + unif(rng) * 3);
      p.c_lo = 0.3 * unif(rng);
      p.c_hi = p.c_lo + unif(rng);
      p.theta_L = log_uniform(rng, 0.2, 1.0);
      p.theta_H = p.theta_L * (1 + unif(rng));
      p.pi_H = 0.1 + 0.8 * unif(rng);
      p.pi_L = 1 - p.pi_H;
      p.lambda = log_uniform(rng, 1e-3, 10.0);
      p.pbar = p.theta_H * p.v_hi * (1 + 2 * unif(rng));
      return build_family(p);
    }
    case FamilyTag::Custom:
      break;
  }
  throw DomainError("random_family: unsupported family tag");
}

// Exact d+1-tangency constructions for the entropy cost. For chosen tangency
// points z_1 < ... < z_{d+1}, a common tangent to the arcs c_i + beta_i z
// + 2g log z requires beta_i = s - 2g/z_i and c_i = L0 + 2g - 2g log z_i;
// the family structure (one piece being the sum of two others) fixes s, L0.
ActionFamily tight_screening(double g2) {
  const double z1 = 0.55, z2 = 1.08, z3 = 1.9;
  const double s = g2 * (1 / z1 + 1 / z3 - 1 / z2);
  const double l0 = g2 * (std::log(z1 * z3 / z2) - 1);
  auto beta = [&](double z) { return s - g2 / z; };
  auto c = [&](double z) { return l0 + g2 - g2 * std::log(z); };
  ScreeningFamilyParams p;
  p.lam_next = 1.0;
  p.pbar = beta(z3);
  p.theta_next = -beta(z1);
  p.theta = 0.5 * p.theta_next;
  p.lam_prev = c(z1) / p.theta;
  p.pi = p.lam_prev + c(z3) / p.pbar;
  return build_family(p);
}

ActionFamily tight_quality(double g2) {
  const double z1 = 0.45, z2 = 0.8, z3 = 1.25, z4 = 2.1;
  const double s = g2 * (1 / z2 + 1 / z4 - 1 / z3);
  const double l0 = g2 * (std::log(z2 * z4 / z3) - 1);
  auto beta = [&](double z) { return s - g2 / z; };
  auto c = [&](double z) { return l0 + g2 - g2 * std::log(z); };
  QualityParams p;
  p.pi_H = 0.6;
  p.pi_L = 0.4;
  p.pbar = beta(z4) / p.pi_H;
  p.lambda = p.pi_L - c(z4) / p.pbar;
  p.theta_H = -beta(z2) / p.pi_H / 0.9;  // with v_lo = 0.9
  p.v_lo = 0.9;
  p.theta_L = c(z2) / p.lambda / p.v_lo;
  p.v_hi = -beta(z1) / (p.pi_H * p.theta_H);
  p.c_lo = 0.0;
  p.c_hi = (p.lambda * p.theta_L * p.v_hi - c(z1)) / p.pi_L;
  return build_family(p);
}

SweepTrial run_trial(const ActionFamily& fam, const CostSpec& cost, Domain dom,
                     double& min_kink_dist) {
  const PolicyEnvelope env = fam.envelope(dom);
  MFunction m{env, cost};
  const ConcavifyResult r = concavify_at_mean(m, 1.0);
  SweepTrial t;
  t.d = env.dimension();
  t.support = r.support_size;
  t.kinks = env.breakpoints;
  if (!r.degenerate && r.support_size >= 2) {
    const double z_min = r.experiment.atoms.front().z;
    const double z_max = r.experiment.atoms.back().z;
    const double rel_step = std::log(dom.z_hi / dom.z_lo) / 20000.0;
    for (double k : env.breakpoints) {
      if (k <= z_min || k >= z_max) continue;  // outside the non-concave span
      for (const auto& a : r.experiment.atoms) {
        if (a.w <= 1e-6) continue;
        const double dist = std::abs(a.z - k) / (k * rel_step);
        min_kink_dist = std::min(min_kink_dist, dist);
      }
    }
  }
  return t;
}

}  // namespace

SweepReport verify_support_bound(FamilyTag tag, const CostSpec& cost, int n_trials,
                                 unsigned seed) {
  if (n_trials < 1) throw DomainError("verify_support_bound needs n_trials >= 1");
  std::mt19937_64 rng(seed);
  SweepReport rep;
  rep.tag = tag;
  rep.seed = seed;
  rep.min_kink_distance = 1e300;
  const Domain dom;
  for (int i = 0; i < n_trials; ++i) {
    const SweepTrial t = run_trial(random_family(tag, rng), cost, dom, rep.min_kink_distance);
    rep.max_support = std::max(rep.max_support, t.support);
    rep.max_d = std::max(rep.max_d, t.d);
    if (t.support > t.d + 1) ++rep.violations;
    rep.trials.push_back(t);
  }
  // the maximal support lives on a measure-zero manifold; add the exact
  // tight construction so the sweep actually observes it
  if (cost.is_entropy_family() && (tag == FamilyTag::Screening || tag == FamilyTag::Quality)) {
    const double g2 = 2 * cost.gamma_eff();
    const ActionFamily fam =
        tag == FamilyTag::Screening ? tight_screening(g2) : tight_quality(g2);
    const SweepTrial t = run_trial(fam, cost, dom, rep.min_kink_distance);
    rep.max_support = std::max(rep.max_support, t.support);
    rep.max_d = std::max(rep.max_d, t.d);
    if (t.support > t.d + 1) ++rep.violations;
    rep.trials.push_back(t);
  }
  rep.n_trials = static_cast<int>(rep.trials.size());
  return rep;
}

TightnessResult search_tightness(FamilyTag tag, const CostSpec& cost, int budget,
                                 unsigned seed) {
  if (budget < 1) throw DomainError("search_tightness needs budget >= 1");
  const Domain dom;
  TightnessResult best;

  auto consider = [&](const ActionFamily& fam) {
    const PolicyEnvelope env = fam.envelope(dom);
    const ConcavifyResult r = concavify_at_mean({env, cost}, 1.0);
    if (r.support_size > best.support) {
      best.family = fam;
      best.result = r;
      best.d = env.dimension();
      best.support = r.support_size;
    }
  };

  if (cost.is_entropy_family()) {
    const double g2 = 2 * cost.gamma_eff();
    switch (tag) {
      case FamilyTag::Monitoring:
        consider(build_family(MonitoringParams{1.05, -1.0}));
        break;
      case FamilyTag::Screening:
        consider(tight_screening(g2));
        break;
      case FamilyTag::Quality:
        consider(tight_quality(g2));
        break;
      default:
        break;
    }
  }
  std::mt19937_64 rng(seed);
  for (int i = 0; i < budget && best.support < best.d + 1; ++i)
    consider(random_family(tag, rng));
  best.success = best.d > 0 && best.support == best.d + 1;
  if (tag == FamilyTag::Monitoring) best.success = best.support == best.d + 1;
  return best;
}

}  // namespace epdscreen
