#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "fatou/conditioning.hpp"
#include "test_support.hpp"

using namespace fatou;

namespace {

struct Fixture {
  Group g{GroupSpec::free(2)};
  StepDistribution nu = StepDistribution::srw(g);
  BoundaryRay a_ray = BoundaryRay::periodic(g, g.parse("a"));
};

}  // namespace

TEST_CASE("h-transition row toward aaa...") {
  Fixture fx;
  auto k = ConditionedKernel::toward(fx.g, fx.nu, fx.a_ray, 15);
  CHECK(k.depth() == 25);
  REQUIRE(k.stabilization());
  CHECK(k.stabilization()->stabilized);
  const Word e{};
  CHECK(h_transition(fx.g, e, fx.g.parse("a"), k) == doctest::Approx(0.75).epsilon(1e-9));
  for (const char* y : {"a'", "b", "b'"})
    CHECK(h_transition(fx.g, e, fx.g.parse(y), k) == doctest::Approx(1.0 / 12).epsilon(1e-9));
  CHECK(h_transition(fx.g, e, fx.g.parse("a a"), k) == 0.0);
  // Harmonic off the pole: the row sums to 1 before renormalization.
  for (const char* x : {"", "a", "b a'", "a a a"}) CHECK(h_row(fx.g, k, fx.g.parse(x)).defect() < 1e-9);
  CHECK(k.to_json(fx.g)["depth"] == 25);
}

TEST_CASE("trivial transforms") {
  Fixture fx;
  auto flat = ConditionedKernel::from_function(fx.nu, TabulatedFunction::constant(2.0), "constant");
  for (const char* y : {"a", "a'", "b", "b'"})
    CHECK(h_transition(fx.g, fx.g.parse("b"), fx.g.parse("b " + std::string(y)), flat) ==
          doctest::Approx(0.25));
  // Same streams, same paths.
  for (std::uint64_t i = 0; i < 20; ++i) {
    RngStream r1(6, i), r2(6, i);
    auto plain = simulate(fx.g, fx.nu, Word{}, StopRule::fixed(30), r1);
    auto cond = simulate_conditioned(fx.g, Word{}, flat, StopRule::fixed(30), r2);
    CHECK(plain.positions == cond.positions);
    CHECK(cond.conditioned == std::optional<std::string>("constant"));
    CHECK(cond.renorm_defect == 0.0);
  }

  auto point = StepDistribution::point_mass(fx.g, fx.g.parse("a"));
  auto h = TabulatedFunction::from_function(
      fx.g, 10, [](const Word& x) { return 1.0 + static_cast<double>(x.size()); }, "1+|x|");
  auto pk = ConditionedKernel::from_function(point, h, "point");
  CHECK(h_transition(fx.g, fx.g.parse("b"), fx.g.parse("b a"), pk) == doctest::Approx(1.0));

  auto zero = ConditionedKernel::from_function(fx.nu, TabulatedFunction::constant(0.0), "zero");
  CHECK_THROWS_AS(h_row(fx.g, zero, Word{}), DegenerateRow);
}

TEST_CASE("conditioned walks exit toward theta") {
  Fixture fx;
  auto k = ConditionedKernel::toward(fx.g, fx.nu, fx.a_ray, 15);
  std::vector<int> ray_distance;
  for (const char* start : {"", "b", "a'"}) {
    const Word z = fx.g.parse(start);
    int in_cyl = 0;
    const int n = 3000;
    for (int i = 0; i < n; ++i) {
      RngStream rng(31, static_cast<std::uint64_t>(i));
      auto t = simulate_conditioned(fx.g, z, k, StopRule::exit_ball(15), rng);
      in_cyl += exit_proxy(fx.g, t, 15)[0] == fx.g.parse("a")[0];
      if (z.empty()) {
        int worst = 0;
        for (const auto& x : t.positions) worst = std::max(worst, tree_distance_to_ray(fx.g, x, fx.a_ray));
        ray_distance.push_back(worst);
      }
    }
    CHECK(in_cyl >= 0.99 * n);
  }
  std::nth_element(ray_distance.begin(), ray_distance.begin() + ray_distance.size() / 2, ray_distance.end());
  CHECK(ray_distance[ray_distance.size() / 2] <= 3);
}

TEST_CASE("conditioning toward a sphere point") {
  Fixture fx;
  const int n = 8;
  const Word y = fx.g.parse("a b a' b b a a b");
  auto k = ConditionedKernel::from_function(fx.nu, martin_function(fx.g, fx.nu, y, n + 15, "K(., y)"), "y");
  int near = 0;
  const int runs = 1000;
  for (int i = 0; i < runs; ++i) {
    RngStream rng(37, static_cast<std::uint64_t>(i));
    auto t = simulate_conditioned(fx.g, Word{}, k, StopRule::exit_ball(n), rng);
    if (gromov_product(fx.g, t.positions.back(), y, Word{}) >= HalfInt(n - 1)) ++near;
  }
  CHECK(near >= 0.9 * runs);
}

TEST_CASE("escaping the tabulated domain is reported") {
  Fixture fx;
  ConditioningOptions small;
  small.depth = 4;
  small.margin = 2;
  auto k = ConditionedKernel::toward(fx.g, fx.nu, fx.a_ray, 0, small);
  RngStream rng(2, 0);
  CHECK_THROWS_AS(simulate_conditioned(fx.g, Word{}, k, StopRule::fixed(100), rng), OutOfTabulatedRange);

  Group z2(GroupSpec::lattice(2));
  CHECK_THROWS_AS(ConditionedKernel::toward(z2, StepDistribution::srw(z2), BoundaryRay::periodic(z2, z2.parse("a")), 3),
                  NonHyperbolicWarning);
}

TEST_CASE("desintegration identity") {
  Fixture fx;
  DesintegrationOptions opt;
  opt.n_outer = 300;
  opt.n_inner = 40;
  opt.horizon = 2;
  opt.seed = 3;

  auto one = desintegration_check(fx.g, fx.nu, Word{}, [](const Trajectory&) { return 1.0; }, opt);
  CHECK(one.left == 1.0);
  CHECK(one.right == doctest::Approx(1.0));
  CHECK(one.z_score == doctest::Approx(0.0).epsilon(1e-9));

  auto ret = desintegration_check(
      fx.g, fx.nu, Word{}, [](const Trajectory& t) { return t.positions[2].empty() ? 1.0 : 0.0; }, opt);
  CHECK(std::abs(ret.left - 0.25) < 3 * ret.left_stderr);
  CHECK(std::abs(ret.right - 0.25) < 3 * ret.right_stderr);
  CHECK(std::abs(ret.z_score) < 3);
  CHECK(ret.max_renorm_defect < 1e-9);

  opt.horizon = 12;
  opt.n_outer = 200;
  auto visits = desintegration_check(
      fx.g, fx.nu, Word{},
      [](const Trajectory& t) {
        return std::min(5.0, static_cast<double>(std::count(t.positions.begin(), t.positions.end(), Word{})));
      },
      opt);
  CHECK(std::abs(visits.z_score) < 3);
  CHECK(visits.left > 1.0);
}
