#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fatou/fatou_lab.hpp"
#include "test_support.hpp"
#include "tree_oracles.hpp"

using namespace fatou;

namespace {

struct Fixture {
  Group g{GroupSpec::free(2)};
  StepDistribution nu = StepDistribution::srw(g);
  BoundaryRay a_ray = BoundaryRay::periodic(g, g.parse("a"));
  BoundaryRay b_ray = BoundaryRay::periodic(g, g.parse("b"));
  BoundarySet cyl_a = BoundarySet::of({Shadow::cylinder(g.parse("a"))});

  TabulatedFunction f_cyl_a(int radius = 40) const {
    return poisson_integral(g, nu, cyl_a, radius, PoissonMethod::LinearSolve).f;
  }
  TabulatedFunction martin_toward(const BoundaryRay& theta, int depth) const {
    return martin_function(g, nu, theta.point(g, depth), depth + 15, "K");
  }
};

}  // namespace

TEST_CASE("annuli") {
  auto a = make_annuli(1, 10, 3);
  REQUIRE(a.size() == 4);
  CHECK(a[0].r1 == 1);
  CHECK(a[0].r2 == 3);
  CHECK(a[3].r1 == 10);
  CHECK(a[3].r2 == 10);
  CHECK_THROWS_AS(make_annuli(1, 10, 0), InvalidArgument);
}

TEST_CASE("non-tangential report of simple functions") {
  Fixture fx;
  auto annuli = make_annuli(1, 24, 2);
  auto five = nt_report(fx.g, TabulatedFunction::constant(5.0), TubeSpec(fx.a_ray, 2), annuli);
  CHECK_FALSE(five.censored);
  CHECK(five.verdicts.bounded);
  CHECK(five.verdicts.convergent);
  CHECK(*five.verdicts.limit == 5.0);
  for (double o : five.osc_per_annulus) CHECK(o == 0.0);

  // Along the ray u(a^n) = 1 - (3/4) 3^-n.
  auto f = fx.f_cyl_a();
  auto rep = nt_report(fx.g, f, TubeSpec(fx.a_ray, 1), annuli);
  CHECK(rep.points_per_annulus.front() == 2);
  for (std::size_t k = 0; k < annuli.size(); ++k) {
    const int n = annuli[k].r2;
    CHECK(rep.max_per_annulus[k] == doctest::Approx(1.0 - 0.75 * std::pow(3.0, -n)).epsilon(1e-6));
    CHECK(rep.max_per_annulus[k] ==
          doctest::Approx(oracle::cylinder_probability(std::string(static_cast<std::size_t>(n), 'a'), "a"))
              .epsilon(1e-6));
  }
  CHECK(rep.verdicts.bounded);
  CHECK(rep.verdicts.convergent);
  CHECK(*rep.verdicts.limit == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(rep.verdicts.saturating);

  auto toward_b = nt_report(fx.g, f, TubeSpec(fx.b_ray, 2), annuli);
  CHECK(toward_b.verdicts.convergent);
  CHECK(*toward_b.verdicts.limit == doctest::Approx(0.0).epsilon(1e-6));

  // K(., aaa...) grows like 3^n along its own pole.
  auto k = fx.martin_toward(fx.a_ray, 34);
  auto pole = nt_report(fx.g, k, TubeSpec(fx.a_ray, 1), annuli);
  CHECK_FALSE(pole.verdicts.bounded);
  CHECK_FALSE(pole.verdicts.convergent);
  auto away = nt_report(fx.g, k, TubeSpec(fx.b_ray, 2), annuli);
  CHECK(away.verdicts.bounded);
  CHECK(away.verdicts.convergent);

  // Larger tubes see larger sups.
  auto wide = nt_report(fx.g, f, TubeSpec(fx.b_ray, 3), annuli);
  for (std::size_t i = 0; i < annuli.size(); ++i) CHECK(wide.sup_per_annulus[i] >= toward_b.sup_per_annulus[i]);

  // Outside the tabulated ball.
  CHECK_THROWS_AS(nt_report(fx.g, fx.f_cyl_a(10), TubeSpec(fx.a_ray, 1), annuli), OutOfTabulatedRange);
  // Too few annuli for the window.
  CHECK(nt_report(fx.g, f, TubeSpec(fx.a_ray, 1), make_annuli(1, 4, 2)).censored);
  CHECK(rep.to_json(fx.g)["annuli"].size() == annuli.size());
}

TEST_CASE("stochastic report") {
  Fixture fx;
  auto k = ConditionedKernel::toward(fx.g, fx.nu, fx.a_ray, 15);
  StochasticOptions opt;
  opt.n_traj = 500;
  opt.exit_radius = 15;
  auto flat = stochastic_report(fx.g, TabulatedFunction::constant(2.0), k, Word{}, opt);
  CHECK(flat.fraction_bounded == 1.0);
  CHECK(flat.fraction_convergent == 1.0);
  CHECK(flat.censored == 0);

  auto f = fx.f_cyl_a(30);
  auto rep = stochastic_report(fx.g, f, k, Word{}, opt);
  CHECK(rep.fraction_convergent >= 0.99);
  std::size_t near_one = 0;
  for (std::size_t i = 0; i < rep.tail_limit.size(); ++i) {
    CHECK(rep.sup_thickened[i] >= rep.sup_path[i]);
    near_one += std::abs(rep.tail_limit[i] - 1.0) < 0.05;
  }
  CHECK(near_one >= 0.99 * rep.tail_limit.size());

  auto kb = ConditionedKernel::toward(fx.g, fx.nu, fx.b_ray, 15);
  auto rb = stochastic_report(fx.g, f, kb, Word{}, opt);
  std::size_t near_zero = 0;
  for (double l : rb.tail_limit) near_zero += std::abs(l) < 0.05;
  CHECK(near_zero >= 0.99 * rb.tail_limit.size());

  // A function known only near o censors trajectories instead of failing.
  auto small = stochastic_report(fx.g, fx.f_cyl_a(5), k, Word{}, opt);
  CHECK(small.censored == opt.n_traj);
}

TEST_CASE("theorem experiment") {
  Fixture fx;
  TheoremOptions opt;
  opt.n_thetas = 40;
  opt.radius = 16;
  opt.seed = 7;
  auto bounded = theorem_experiment(fx.g, fx.nu, fx.f_cyl_a(), opt);
  CHECK(bounded.agrees);
  CHECK(bounded.pooled.bounded_convergent == 80);
  CHECK(bounded.censored_fraction == 0.0);

  auto k0 = fx.martin_toward(fx.a_ray, 30);
  auto k1 = fx.martin_toward(fx.b_ray, 30);
  auto diff = TabulatedFunction::combine(1.0, k0, -1.0, k1, "K0 - K1");
  opt.poles = {fx.a_ray, fx.b_ray};
  auto signed_u = theorem_experiment(fx.g, fx.nu, diff, opt);
  CHECK(signed_u.agrees);
  CHECK(signed_u.censored_fraction <= 0.2);
  CHECK(signed_u.pooled.total() == 80);

  auto zero = theorem_experiment(fx.g, fx.nu, TabulatedFunction::constant(0.0), opt);
  CHECK(zero.pooled.bounded_convergent + zero.pooled.censored == 80);
  CHECK(zero.to_json()["agrees"] == true);
}

TEST_CASE("uniform shadow mass") {
  Fixture fx;
  CHECK(lemma61_free_oracle(1) == doctest::Approx(0.25));
  CHECK(lemma61_free_oracle(3) == doctest::Approx(0.25 / 9));
  CHECK(lemma61_free_oracle(0) == 1.0);

  Lemma61Options opt;
  opt.points = ball(fx.g, 1).elements();
  opt.n_rays = 5;
  opt.n_traj = 2000;
  auto r = lemma61_check(fx.g, fx.nu, opt);
  CHECK(r.pass);
  CHECK(r.oracle == doctest::Approx(0.25));
  CHECK(r.pairs == 25);
  CHECK(r.min_estimate >= 0.25 - 4 * r.sigma_at_min);

  opt.alpha = 0;
  CHECK(lemma61_check(fx.g, fx.nu, opt).min_estimate == 1.0);

  // Seen from x, the shadow toward theta equals the one at o toward x^{-1} theta.
  const Word x = fx.g.parse("b a");
  auto theta = BoundaryRay::frozen(fx.g, fx.g.parse("b a a b"));
  auto shifted = BoundaryRay::frozen(fx.g, fx.g.parse("a b"));
  auto px = shadow_mass_from(fx.g, fx.nu, x, theta, 2, 4000, 10, 3);
  auto po = shadow_mass_from(fx.g, fx.nu, Word{}, shifted, 2, 4000, 10, 4);
  CHECK(std::abs(px.value - po.value) < 3 * std::hypot(px.stderr_, po.stderr_));
  CHECK(std::abs(px.value - 1.0 / 12) < 4 * px.stderr_);
}

TEST_CASE("escape probability outside the tube") {
  Fixture fx;
  Lemma62Options opt;
  opt.n_points = 12;
  opt.n_traj = 3000;
  auto r = lemma62_check(fx.g, fx.nu, fx.cyl_a, opt);
  REQUIRE(r.points.size() == 12);
  CHECK(r.pass);
  CHECK(r.eta_hat >= 11.0 / 12 - 3 * r.sigma_at_min);
  for (const auto& p : r.points) {
    CHECK(p.x.letters().front() != fx.g.parse("a")[0]);
    const double exact = 1.0 - oracle::cylinder_probability(testing_support::to_oracle(p.x), "a");
    CHECK(std::abs(p.value - exact) < 4 * p.stderr_ + 1e-12);
  }
  auto none = lemma62_check(fx.g, fx.nu, BoundarySet::empty(), opt);
  CHECK(none.eta_hat == 1.0);

  Group z2(GroupSpec::lattice(2));
  CHECK_THROWS_AS(lemma62_check(z2, StepDistribution::srw(z2), BoundarySet::of({Shadow::cylinder(z2.parse("a"))}), opt),
                  NonHyperbolicWarning);
}

TEST_CASE("corollary checks") {
  Fixture fx;
  CorollaryOptions opt;
  opt.n_thetas = 3;
  opt.n_traj = 200;
  auto r = corollary_checks(fx.g, fx.nu, fx.cyl_a, fx.f_cyl_a(), opt);
  CHECK(r.thetas.size() == 3);
  CHECK(r.tail_in_tube >= 0.95);
  CHECK(r.spikes_contained);
  CHECK(r.width_disagreements == 0);
  CHECK(r.width_checked == 3);

  auto full = corollary_checks(fx.g, fx.nu, BoundarySet::full(), fx.f_cyl_a(), opt);
  CHECK(full.tail_in_tube == 1.0);
  for (const auto& radii : full.spike_radius)
    for (int x : radii) CHECK(x == 0);
}

TEST_CASE("escape from the tube controls the exit law") {
  Fixture fx;
  EtaTauOptions opt;
  opt.c = 2;
  opt.n_traj = 3000;
  opt.eta_hat = 11.0 / 12;
  opt.points = {fx.g.parse("a a a"), fx.g.parse("a a a a a a"), fx.g.parse("a a a a a a a a a")};
  auto r = eta_tau_bound_check(fx.g, fx.nu, fx.cyl_a, opt);
  CHECK(r.pass);
  CHECK(r.monotone);
  CHECK(r.points[0].p_tau > r.points[2].p_tau);

  opt.points = {Word{}, fx.g.parse("b")};
  auto full = eta_tau_bound_check(fx.g, fx.nu, BoundarySet::full(), opt);
  for (const auto& p : full.points) {
    CHECK(p.p_tau == 0.0);
    CHECK(p.p_not_e == 0.0);
  }
  // Starting outside the tube: tau = 0.
  opt.points = {fx.g.parse("b b b")};
  auto out = eta_tau_bound_check(fx.g, fx.nu, fx.cyl_a, opt);
  CHECK(out.points[0].p_tau == 1.0);
  CHECK(out.pass);
}

TEST_CASE("stopped process stays below the threshold") {
  Fixture fx;
  auto k = fx.martin_toward(fx.a_ray, 30);
  std::vector<Trajectory> ts;
  for (std::uint64_t i = 0; i < 500; ++i) {
    RngStream rng(41, i);
    ts.push_back(simulate(fx.g, fx.nu, Word{}, StopRule::exit_ball(12), rng));
  }
  for (double m : {0.5, 2.0, 10.0}) {
    auto r = stopped_bound_check(fx.g, fx.nu, k, ts, m);
    CHECK(r.pass);
    CHECK(r.trajectories == 500);
  }
  CHECK(stopped_bound_check(fx.g, fx.nu, k, ts, 0.5).stopped == 500);
}
