#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "epdscreen/concavify.hpp"

using namespace epdscreen;

namespace {

// envelope with a single kink of slope gap delta_beta at kappa
MFunction single_kink_m(double delta_beta, double kappa, double gamma) {
  std::vector<AffinePiece> actions = {{0.0, 0.0}, {-delta_beta * kappa, delta_beta}};
  return {upper_envelope(actions), CostSpec::entropy(gamma)};
}

// random envelope with exactly d kinks inside [lo, hi]
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

}  // namespace

TEST_CASE("closed form single kink at unit threshold") {
  const auto cf = closed_form_single_kink(1.0, 1.0, 0.5);
  CHECK(cf.eta == doctest::Approx(1.0));
  CHECK(cf.a == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
  CHECK(cf.b == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-12));
  const double e = std::exp(1.0);
  CHECK(cf.w == doctest::Approx((e - 2.0) / (e + 1.0 / e - 2.0)).epsilon(1e-12));
  CHECK(cf.w == doctest::Approx(0.66129).epsilon(3e-5));
}

TEST_CASE("closed form identity b/a = e^eta over random draws") {
  std::mt19937 rng(17);
  std::uniform_real_distribution<double> ul(std::log(1e-2), std::log(10.0));
  std::uniform_real_distribution<double> uk(std::log(0.2), std::log(5.0));
  std::uniform_real_distribution<double> ug(std::log(0.05), std::log(5.0));
  for (int t = 0; t < 1000; ++t) {
    const double db = std::exp(ul(rng));
    const double kap = std::exp(uk(rng));
    const double g = std::exp(ug(rng));
    const auto cf = closed_form_single_kink(db, kap, g);
    CHECK(cf.b / cf.a == doctest::Approx(std::exp(cf.eta)).epsilon(1e-10));
    CHECK(cf.a == doctest::Approx((2 * g / db) * (1 - std::exp(-cf.eta))).epsilon(1e-10));
    CHECK(cf.b == doctest::Approx((2 * g / db) * (std::exp(cf.eta) - 1)).epsilon(1e-10));
    CHECK(cf.a < kap);
    CHECK(kap < cf.b);
    if (cf.a < 1 && 1 < cf.b) {
      CHECK(cf.w > 0);
      CHECK(cf.w <= 1);  // rounds to 1 when eta is huge
      CHECK(cf.w == doctest::Approx((cf.b - 1) / (cf.b - cf.a)).epsilon(1e-10));
    }
  }
}

TEST_CASE("closed form limits and overflow") {
  const auto tiny = closed_form_single_kink(1e-8, 1.0, 0.5);
  CHECK(tiny.a == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(tiny.b == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(tiny.w == doctest::Approx(0.5).epsilon(1e-6));
  CHECK_THROWS_AS(closed_form_single_kink(2000.0, 1.0, 0.5), NumericalError);
  CHECK_THROWS_AS(closed_form_single_kink(-1.0, 1.0, 0.5), DomainError);
}

TEST_CASE("concave M yields the degenerate experiment") {
  const MFunction m{upper_envelope(std::vector<AffinePiece>{{0.3, -1.2}}),
                    CostSpec::entropy(0.5)};
  const auto r = concavify_at_mean(m, 1.0);
  CHECK(r.degenerate);
  CHECK(r.support_size == 1);
  CHECK(r.experiment.atoms[0].z == doctest::Approx(1.0));
  CHECK(r.value == doctest::Approx(eval_M(m, 1.0)).epsilon(1e-12));
}

TEST_CASE("numeric concavification matches the closed form") {
  const auto cf = closed_form_single_kink(1.0, 1.0, 0.5);
  const auto r = concavify_at_mean(single_kink_m(1.0, 1.0, 0.5), 1.0);
  REQUIRE(r.support_size == 2);
  CHECK(r.experiment.atoms[0].z == doctest::Approx(cf.a).epsilon(1e-8));
  CHECK(r.experiment.atoms[1].z == doctest::Approx(cf.b).epsilon(1e-8));
  CHECK(r.experiment.atoms[0].w == doctest::Approx(cf.w).epsilon(1e-8));
}

TEST_CASE("concavify value dominates the no-investigation value") {
  std::mt19937 rng(23);
  std::uniform_int_distribution<int> ud(0, 2);
  for (int t = 0; t < 1000; ++t) {
    const MFunction m = random_kinks_m(rng, ud(rng), 0.5);
    const auto r = concavify_at_mean(m, 1.0);
    CHECK(r.value >= eval_M(m, 1.0) - 1e-9);
    CHECK(r.experiment.mean() == doctest::Approx(1.0).epsilon(1e-7));
    // atoms lie on the concave envelope: chord through the value supports M
    for (const auto& atom : r.experiment.atoms)
      CHECK(eval_M(m, atom.z) <= r.value + 1e-6 * (1 + std::abs(r.value)) +
                                     std::abs(atom.z - 1) * 100);
  }
}

TEST_CASE("oracle equivalence on random one- and two-kink instances") {
  std::mt19937 rng(31);
  std::uniform_int_distribution<int> ud(1, 2);
  for (int t = 0; t < 300; ++t) {
    const MFunction m = random_kinks_m(rng, ud(rng), 0.5);
    const auto fast = concavify_at_mean(m, 1.0);
    const auto oracle = concavify_lp_oracle(m, 1.0, 10001);
    CHECK(std::abs(fast.value - oracle.value) <= 5e-5 * (1 + std::abs(fast.value)));
    CHECK(fast.value >= oracle.value - 1e-9);  // the grid can only lose value
  }
}

TEST_CASE("support bound support <= kinks + 1") {
  std::mt19937 rng(47);
  for (int d = 0; d <= 3; ++d) {
    for (int t = 0; t < 800; ++t) {
      const MFunction m = random_kinks_m(rng, d, 0.5);
      const auto r = concavify_at_mean(m, 1.0);
      CHECK(r.support_size <= d + 1);
    }
  }
}

TEST_CASE("no atom sits on an interior kink") {
  std::mt19937 rng(53);
  const double step = std::log(1e3 / 1e-4) / 20000;  // default log-grid step
  for (int t = 0; t < 500; ++t) {
    const MFunction m = random_kinks_m(rng, 2, 0.5);
    const auto r = concavify_at_mean(m, 1.0);
    if (r.degenerate) continue;
    const double span_lo = r.experiment.atoms.front().z;
    const double span_hi = r.experiment.atoms.back().z;
    for (double bp : m.envelope.breakpoints) {
      if (bp <= span_lo || bp >= span_hi) continue;
      for (const auto& atom : r.experiment.atoms) {
        if (atom.w <= 1e-6) continue;
        CHECK(std::abs(std::log(atom.z / bp)) > step);
      }
    }
  }
}

TEST_CASE("concavify at a non-unit mean") {
  const MFunction m = single_kink_m(1.0, 1.5, 0.5);
  const auto r = concavify_at_mean(m, 1.5);
  CHECK(r.experiment.mean() == doctest::Approx(1.5).epsilon(1e-8));
  CHECK(r.support_size == 2);
}

TEST_CASE("capped concavification") {
  const MFunction m = single_kink_m(1.0, 1.0, 0.5);
  const auto uncapped = concavify_at_mean(m, 1.0);
  const double full_cost = experiment_cost(m.cost, uncapped.experiment);

  const auto zero = concavify_capped(m, 1.0, 0.0, 4001);
  CHECK(zero.support_size == 1);
  CHECK(zero.experiment.atoms[0].z == doctest::Approx(1.0).epsilon(1e-6));

  const auto slack = concavify_capped(m, 1.0, 10 * full_cost, 4001);
  CHECK(slack.value == doctest::Approx(uncapped.value).epsilon(1e-6));

  const auto tight = concavify_capped(m, 1.0, 0.5 * full_cost, 4001);
  CHECK(experiment_cost(m.cost, tight.experiment) <= 0.5 * full_cost + 1e-6);
  CHECK(tight.value <= uncapped.value + 1e-9);
  double spread_tight = 0, spread_full = 0;
  for (const auto& a : tight.experiment.atoms)
    spread_tight = std::max(spread_tight, std::abs(a.z - 1));
  for (const auto& a : uncapped.experiment.atoms)
    spread_full = std::max(spread_full, std::abs(a.z - 1));
  CHECK(spread_tight < spread_full);
  CHECK_THROWS_AS(concavify_capped(m, 1.0, -0.1, 4001), DomainError);
}

TEST_CASE("lp oracle rejects infeasible means and tiny grids") {
  const MFunction m = single_kink_m(1.0, 1.0, 0.5);
  CHECK_THROWS_AS(concavify_at_mean(m, 1.0, 5), DomainError);
  CHECK_THROWS_AS(concavify_lp_oracle(m, 5e3, 1001), DomainError);
}
