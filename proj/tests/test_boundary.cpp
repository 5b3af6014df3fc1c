#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "fatou/boundary.hpp"
#include "fatou/error.hpp"
#include "test_support.hpp"
#include "tree_oracles.hpp"

using namespace fatou;
using testing_support::to_oracle;

namespace {

std::set<std::string> as_set(const std::vector<Word>& ws) {
  std::set<std::string> out;
  for (const auto& w : ws) out.insert(to_oracle(w));
  return out;
}

}  // namespace

TEST_CASE("periodic rays") {
  Group f2(GroupSpec::free(2));
  auto theta = BoundaryRay::periodic(f2, f2.parse("a"));
  for (int n = 0; n <= 12; ++n) {
    CHECK(static_cast<int>(theta.point(f2, n).size()) == n);
    if (n > 0) CHECK(distance(f2, theta.point(f2, n - 1), theta.point(f2, n), 2) == 1);
  }
  CHECK(to_oracle(BoundaryRay::periodic(f2, f2.parse("a b'")).point(f2, 5)) == "aBaBa");
  CHECK_THROWS_AS(BoundaryRay::periodic(f2, Word(f2.parse_letters("a b a'"))), InvalidArgument);
  CHECK_THROWS_AS(BoundaryRay::periodic(f2, Word{}), InvalidArgument);

  Group s(GroupSpec::small_cancellation({"a", "b", "c", "d"}, {"a b a' b' c d c' d'"}));
  auto ray = BoundaryRay::periodic(s, s.parse("a"));
  for (int n = 0; n <= 5; ++n) CHECK(s.word_length(ray.point(s, n)) == n);
}

TEST_CASE("frozen rays continue the anchor geodesically") {
  Group f2(GroupSpec::free(2));
  auto r = BoundaryRay::frozen(f2, f2.parse("a b'"));
  CHECK(to_oracle(r.point(f2, 2)) == "aB");
  CHECK(to_oracle(r.point(f2, 5)) == "aBaaa");  // least letter not cancelling b'
  auto r2 = BoundaryRay::frozen(f2, f2.parse("b a'"));
  CHECK(to_oracle(r2.point(f2, 4)) == "bAAA");
  auto r3 = BoundaryRay::frozen(f2, f2.parse("b"));
  CHECK(to_oracle(r3.point(f2, 3)) == "baa");

  Group fpc(GroupSpec::free_product_cyclic({2, 2, 2}));
  auto r4 = BoundaryRay::frozen(fpc, fpc.parse("a"));
  for (int n = 0; n < 10; ++n) CHECK(static_cast<int>(r4.point(fpc, n).size()) == n);

  auto j = r.to_json(f2);
  CHECK(j["type"] == "frozen");
  CHECK(BoundaryRay::from_json(f2, j) == r);
  auto p = BoundaryRay::periodic(f2, f2.parse("a b"));
  CHECK(BoundaryRay::from_json(f2, p.to_json(f2)) == p);
}

TEST_CASE("gromov product to a ray") {
  Group f2(GroupSpec::free(2));
  auto theta = BoundaryRay::periodic(f2, f2.parse("a"));
  CHECK(gromov_product_to_ray(f2, f2.parse("a a"), theta, Word{}, 10) == HalfInt(2));
  CHECK(gromov_product_to_ray(f2, f2.parse("b"), theta, Word{}, 10) == HalfInt(0));
  CHECK(gromov_product_to_ray(f2, Word{}, theta, Word{}, 10) == HalfInt(0));
  // The tree shortcut agrees with the general formula.
  for (const auto& s : oracle::tree_ball(3)) {
    Word x = testing_support::from_oracle(f2, s);
    CHECK(gromov_product_to_ray(f2, x, theta, Word{}, 10) ==
          gromov_product(f2, x, theta.point(f2, 10), Word{}));
  }
}

TEST_CASE("tube membership") {
  Group f2(GroupSpec::free(2));
  auto theta = BoundaryRay::periodic(f2, f2.parse("a"));
  TubeSpec tube(theta, HalfInt(2));
  CHECK(in_tube(f2, f2.parse("a a b"), tube, Word{}, 0) == TubeVerdict::In);
  CHECK(in_tube(f2, f2.parse("b b b"), tube, Word{}, 0) == TubeVerdict::Out);
  CHECK(in_tube(f2, Word{}, tube, Word{}, 0) == TubeVerdict::In);
  CHECK_THROWS_AS(TubeSpec(theta, HalfInt(0)), InvalidArgument);

  // The general product route agrees with exact distances on the tree.
  for (const auto& s : oracle::tree_ball(4)) {
    Word x = testing_support::from_oracle(f2, s);
    const bool exact = in_tube(f2, x, tube, Word{}, 0) == TubeVerdict::In;
    const HalfInt p = gromov_product(f2, Word{}, theta.point(f2, 20), x);
    CHECK(exact == (p < tube.c));
  }

  Group z2(GroupSpec::lattice(2));
  CHECK_THROWS_AS(in_tube(z2, Word{}, TubeSpec(BoundaryRay::periodic(z2, z2.parse("a")), HalfInt(1)), Word{}, 0),
                  NonHyperbolicWarning);
}

TEST_CASE("tube points and spikes") {
  Group f2(GroupSpec::free(2));
  auto theta = BoundaryRay::periodic(f2, f2.parse("a"));
  auto c1 = tube_points(f2, TubeSpec(theta, HalfInt(1)), ball(f2, 3), 0);
  CHECK(as_set(c1.in) == std::set<std::string>{"", "a", "aa", "aaa"});
  CHECK(c1.uncertain.empty());

  auto c2 = tube_points(f2, TubeSpec(theta, HalfInt(2)), ball(f2, 2), 0);
  std::set<std::string> expect;
  for (const auto& s : oracle::tree_ball(2)) {
    int d = 100;
    for (std::string r : {"", "a", "aa", "aaa"}) d = std::min(d, oracle::tree_distance(s, r));
    if (d < 2) expect.insert(s);
  }
  CHECK(as_set(c2.in) == expect);

  // Enumeration around the ray matches classification of the full ball.
  for (int c : {1, 2, 3}) {
    TubeSpec t(theta, HalfInt(c));
    CHECK(as_set(tube_points(f2, t, 5, 0).in) == as_set(tube_points(f2, t, ball(f2, 5), 0).in));
  }

  auto c5 = tube_points(f2, TubeSpec(theta, HalfInt(1)), 5, 0);
  CHECK(as_set(spike(f2, c5.in, 3)) == std::set<std::string>{"aaaa", "aaaaa"});
  CHECK(spike(f2, {}, 3).empty());
  CHECK(as_set(spike(f2, c5.in, 0)) == std::set<std::string>{"a", "aa", "aaa", "aaaa", "aaaaa"});
}

TEST_CASE("tube monotonicity and ray containment") {
  Group f2(GroupSpec::free(2));
  auto theta = BoundaryRay::frozen(f2, f2.parse("a b' a"));
  std::set<std::string> previous;
  for (int c = 1; c <= 4; ++c) {
    auto pts = as_set(tube_points(f2, TubeSpec(theta, HalfInt(c)), 5, 0).in);
    CHECK(std::includes(pts.begin(), pts.end(), previous.begin(), previous.end()));
    if (c > 1) CHECK(pts.size() > previous.size());
    for (int n = 0; n <= 5; ++n) CHECK(pts.count(to_oracle(theta.point(f2, n))) == 1);
    previous = pts;
  }
}

TEST_CASE("tube membership changes little with the base point") {
  // Moving the base from e to o' alters membership only near the tube wall.
  Group f2(GroupSpec::free(2));
  auto theta = BoundaryRay::periodic(f2, f2.parse("a"));
  TubeSpec tube(theta, HalfInt(2));
  Word o2 = f2.parse("b");
  const int shift = 1;
  const Ball b4 = ball(f2, 4);
  for (const auto& x : b4.elements()) {
    const bool from_e = in_tube(f2, x, tube, Word{}, 0) == TubeVerdict::In;
    const bool from_o2 = in_tube(f2, x, tube, o2, 0) == TubeVerdict::In;
    if (from_e != from_o2) {
      const int d = tree_distance_to_ray(f2, x, theta);
      CHECK(std::abs(d - 2) <= 2 * shift);
    }
  }
}

TEST_CASE("shadows") {
  Group f2(GroupSpec::free(2));
  auto theta = BoundaryRay::periodic(f2, f2.parse("a"));
  CHECK(shadow_contains(f2, Shadow::of_ray(theta, 1), f2.parse("a b"), Word{}, 0, 10).contains);
  CHECK_FALSE(shadow_contains(f2, Shadow::of_ray(theta, 2), f2.parse("a b"), Word{}, 0, 10).contains);
  CHECK(shadow_contains(f2, Shadow::of_ray(theta, 0), f2.parse("b"), Word{}, 0, 10).contains);

  // Nested thresholds give nested shadows.
  for (const auto& s : oracle::tree_ball(4)) {
    Word y = testing_support::from_oracle(f2, s);
    for (int r = 0; r < 4; ++r) {
      bool big = shadow_contains(f2, Shadow::of_ray(theta, r), y, Word{}, 0, 10).contains;
      bool small = shadow_contains(f2, Shadow::of_ray(theta, r + 1), y, Word{}, 0, 10).contains;
      CHECK((!small || big));
    }
  }

  // Uncertain band with delta > 0 resolves to false.
  auto v = shadow_contains(f2, Shadow::of_ray(theta, 2), f2.parse("a a"), Word{}, HalfInt(1), 10);
  CHECK_FALSE(v.contains);
  CHECK(v.uncertain);

  // Cylinders on the tree are prefix tests.
  auto cyl = Shadow::cylinder(f2.parse("a b"));
  CHECK(cyl.label(f2) == "cyl(a b)");
  CHECK(shadow_contains(f2, cyl, f2.parse("a b a"), Word{}, 0, 10).contains);
  CHECK_FALSE(shadow_contains(f2, cyl, f2.parse("a"), Word{}, 0, 10).contains);
  CHECK_FALSE(shadow_contains(f2, cyl, f2.parse("a a b"), Word{}, 0, 10).contains);
}

TEST_CASE("shadow inclusion used for covering arguments") {
  // theta in W_beta(xi) implies W_beta(xi) within W_alpha(theta), beta = alpha + delta.
  Group f2(GroupSpec::free(2));
  std::vector<BoundaryRay> rays;
  for (const auto& s : oracle::tree_ball(2)) rays.push_back(BoundaryRay::frozen(f2, testing_support::from_oracle(f2, s)));
  const int depth = 12;
  for (int alpha = 0; alpha <= 3; ++alpha) {
    const int beta = alpha;  // delta = 0 on the tree
    for (const auto& theta : rays)
      for (const auto& xi : rays) {
        if (gromov_product_rays(f2, theta, xi, Word{}, depth) < HalfInt(beta)) continue;
        for (const auto& eta : rays)
          if (gromov_product_rays(f2, eta, xi, Word{}, depth) >= HalfInt(beta))
            CHECK(gromov_product_rays(f2, eta, theta, Word{}, depth) >= HalfInt(alpha));
      }
  }
}

TEST_CASE("boundary sets and tubes over sets") {
  Group f2(GroupSpec::free(2));
  auto cyl_a = BoundarySet::of({Shadow::cylinder(f2.parse("a"))});
  CHECK(cyl_a.contains(f2, f2.parse("a b b")));
  CHECK_FALSE(cyl_a.contains(f2, f2.parse("b a")));
  CHECK(BoundarySet::full().contains(f2, f2.parse("b")));
  CHECK_FALSE(BoundarySet::empty().contains(f2, f2.parse("b")));
  CHECK(cyl_a.contains(f2, BoundaryRay::periodic(f2, f2.parse("a"))));
  CHECK_FALSE(cyl_a.contains(f2, BoundaryRay::periodic(f2, f2.parse("b"))));
  CHECK(cyl_a.label(f2) == "cyl(a)");

  // Gamma_1(cyl a) = {e} u cyl(a); Gamma_2 adds the neighbours.
  CHECK(in_tube_of_set(f2, Word{}, cyl_a, 1, 0) == TubeVerdict::In);
  CHECK(in_tube_of_set(f2, f2.parse("a b"), cyl_a, 1, 0) == TubeVerdict::In);
  CHECK(in_tube_of_set(f2, f2.parse("b"), cyl_a, 1, 0) == TubeVerdict::Out);
  CHECK(in_tube_of_set(f2, f2.parse("b"), cyl_a, 2, 0) == TubeVerdict::In);
  CHECK(in_tube_of_set(f2, f2.parse("b b"), cyl_a, 2, 0) == TubeVerdict::Out);
  CHECK(in_tube_of_set(f2, f2.parse("b b"), BoundarySet::full(), 1, 0) == TubeVerdict::In);
  CHECK(in_tube_of_set(f2, f2.parse("b b"), BoundarySet::empty(), 1, 0) == TubeVerdict::Out);
}
