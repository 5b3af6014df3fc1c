#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>
#include <sstream>

#include "fatou/delta.hpp"
#include "fatou/error.hpp"
#include "fatou/metric.hpp"
#include "fatou/rng.hpp"
#include "test_support.hpp"
#include "tree_oracles.hpp"

using namespace fatou;
using testing_support::from_oracle;
using testing_support::to_oracle;

namespace {

const char* kGenus2 = "a b a' b' c d c' d'";

Group surface_group() {
  return Group(GroupSpec::small_cancellation({"a", "b", "c", "d"}, {kGenus2}));
}

std::vector<Letter> random_letters(const Group& g, RngStream& rng, std::size_t n) {
  std::vector<Letter> raw;
  for (std::size_t i = 0; i < n; ++i)
    raw.push_back(static_cast<Letter>(rng.below(2 * static_cast<std::uint64_t>(g.generator_count()))));
  return raw;
}

}  // namespace

TEST_CASE("normalize: free reduction") {
  Group g(GroupSpec::free(2));
  CHECK(g.format(g.parse("a b b'")) == "a");
  CHECK(g.parse("a a'").empty());
  CHECK(g.format(g.parse("e")) == "e");
  CHECK_THROWS_AS(g.parse("a x"), UnknownGenerator);
}

TEST_CASE("normalize agrees with the reduced-word oracle and is idempotent") {
  Group g(GroupSpec::free(2));
  RngStream rng(7, 0);
  for (int trial = 0; trial < 2000; ++trial) {
    auto raw = random_letters(g, rng, rng.below(14));
    Word w = g.normalize(raw);
    std::string s;
    for (auto l : raw) s += to_oracle(Word({l}));
    CHECK(to_oracle(w) == oracle::reduce(s));
    CHECK(g.normalize(w.letters()) == w);
  }
}

TEST_CASE("normalize: free product of cyclic groups") {
  Group g(GroupSpec::free_product_cyclic({2, 3, 4}));
  // a has order 2, b order 3, c order 4
  CHECK(g.parse("a a").empty());
  CHECK(g.format(g.parse("a'")) == "a");
  CHECK(g.format(g.parse("b b")) == "b'");
  CHECK(g.parse("b b b").empty());
  CHECK(g.format(g.parse("c' c'")) == "c c");
  CHECK(g.format(g.parse("a b b a")) == "a b' a");
  RngStream rng(3, 1);
  for (int trial = 0; trial < 500; ++trial) {
    Word w = g.normalize(random_letters(g, rng, rng.below(16)));
    CHECK(g.normalize(w.letters()) == w);
    CHECK(g.multiply(w, g.inverse(w)).empty());
  }
}

TEST_CASE("normalize: lattice words are sorted integer vectors") {
  Group g(GroupSpec::lattice(2));
  CHECK(g.format(g.parse("b a b' a a")) == "a a a");
  CHECK(g.format(g.parse("b a' b")) == "a' b b");
  CHECK(g.non_hyperbolic());
  CHECK_FALSE(Group(GroupSpec::lattice(1)).non_hyperbolic());
  CHECK_FALSE(Group(GroupSpec::free(2)).non_hyperbolic());
}

TEST_CASE("small cancellation: construction and Dehn reduction") {
  Group g = surface_group();
  CHECK(g.parse(kGenus2).empty());
  CHECK(g.parse("b a b' a' d c d' c'").empty());  // inverse of a cyclic conjugate
  // More than half a relator shortens: a b a' b' c = d c d'
  CHECK(g.format(g.parse("a b a' b' c")) == "d c d'");
  CHECK(g.is_identity(g.parse_letters("c d c' d' a b a' b'")));
  CHECK_FALSE(g.is_identity(g.parse_letters("a b")));

  RngStream rng(11, 2);
  for (int trial = 0; trial < 300; ++trial) {
    Word w = g.normalize(random_letters(g, rng, rng.below(12)));
    CHECK(g.normalize(w.letters()) == w);
    CHECK(g.is_identity(g.multiply(w, g.inverse(w)).letters()));
  }

  // <a, b | [a, b]> has pieces of length 1 in a relator of length 4.
  CHECK_THROWS_AS(Group(GroupSpec::small_cancellation({"a", "b"}, {"a b a' b'"})),
                  InvalidPresentation);
  CHECK_THROWS_AS(Group(GroupSpec::small_cancellation({"a", "b"}, {"a b b' a'"})),
                  InvalidPresentation);
}

TEST_CASE("small cancellation normal forms are canonical on a ball") {
  // Distinct normal forms must be distinct elements; Dehn's algorithm
  // decides equality exactly under C'(1/6).
  Group g = surface_group();
  Ball b = ball(g, 3);
  for (std::size_t i = 0; i < b.size(); ++i)
    for (std::size_t j = i + 1; j < b.size(); ++j) {
      auto t = g.quotient(b[i], b[j]);
      REQUIRE_FALSE(g.is_identity(t.letters()));
    }
  // Every normal form in the ball is a geodesic word.
  for (std::size_t i = 0; i < b.size(); ++i) CHECK(static_cast<int>(b[i].size()) == b.distance(i));
}

TEST_CASE("group spec text round trip") {
  for (std::string text : {"free:2", "fpc:2,2,2", "lattice:3", "sc:a,b,c,d:a b a' b' c d c' d'"}) {
    CHECK(GroupSpec::parse(text).str() == text);
  }
  CHECK_THROWS_AS(GroupSpec::parse("hyperbolic:7"), InvalidPresentation);
  CHECK_THROWS_AS(Group(GroupSpec::free(1)), InvalidPresentation);
}

TEST_CASE("neighbors") {
  Group f2(GroupSpec::free(2));
  auto n0 = f2.neighbors(Word{});
  CHECK(n0.size() == 4);
  std::set<std::string> got;
  for (const auto& w : f2.neighbors(f2.parse("a"))) got.insert(to_oracle(w));
  CHECK(got == std::set<std::string>{"aa", "", "ab", "aB"});

  Group fpc(GroupSpec::free_product_cyclic({2, 2, 2}));
  CHECK(fpc.neighbors(Word{}).size() == 3);
  CHECK(fpc.is_tree());
}

TEST_CASE("ball sizes follow the growth formulas") {
  Group f2(GroupSpec::free(2));
  CHECK(ball(f2, 0).size() == 1);
  CHECK(ball(f2, 1).size() == 5);
  CHECK(ball(f2, 6).size() == 1457);
  Group z2(GroupSpec::lattice(2));
  CHECK(ball(z2, 3).size() == 25);
  CHECK(estimated_ball_size(z2, 3) == doctest::Approx(25));
  CHECK_THROWS_AS(ball(f2, 12, Word{}, 1000), BudgetExceeded);

  Ball b = ball(f2, 4);
  CHECK(b.distance(0) == 0);
  for (std::size_t i = 1; i < b.size(); ++i) {
    auto p = b.parent(i);
    REQUIRE(p);
    CHECK(b.distance(*p) == b.distance(i) - 1);
    CHECK(distance(f2, b[*p], b[i], 1) == 1);
  }
  // Reduced-word oracle: the ball holds exactly the reduced words of length <= 4.
  std::set<std::string> expect;
  for (const auto& s : oracle::tree_ball(4)) expect.insert(s);
  std::set<std::string> got;
  for (const auto& w : b.elements()) got.insert(to_oracle(w));
  CHECK(got == expect);

  std::ostringstream csv;
  ball(f2, 1).write_csv(csv, f2);
  CHECK(csv.str() == "word,distance,parent\ne,0,\na,1,e\na',1,e\nb,1,e\nb',1,e\n");
}

TEST_CASE("ball around another center") {
  Group f2(GroupSpec::free(2));
  Word c = f2.parse("a b");
  Ball b = ball(f2, 2, c);
  CHECK(b.center() == c);
  CHECK(b.size() == 17);
  for (std::size_t i = 0; i < b.size(); ++i) CHECK(distance(f2, c, b[i], 2) == b.distance(i));
}

TEST_CASE("distance") {
  Group f2(GroupSpec::free(2));
  CHECK(distance(f2, f2.parse("a"), f2.parse("a b"), 10) == 1);
  CHECK(distance(f2, f2.parse("a'"), f2.parse("a b"), 10) == 3);
  CHECK_FALSE(distance(f2, f2.parse("a'"), f2.parse("a b"), 2).has_value());
  Group z2(GroupSpec::lattice(2));
  CHECK(distance(z2, Word{}, z2.parse("a a b b b"), 10) == 5);
  Group s = surface_group();
  CHECK(distance(s, Word{}, s.parse("a b a' b' c"), 10) == 3);

  RngStream rng(5, 0);
  auto pts = oracle::tree_ball(3);
  for (int t = 0; t < 300; ++t) {
    const auto& x = pts[rng.below(pts.size())];
    const auto& y = pts[rng.below(pts.size())];
    auto d = distance(f2, from_oracle(f2, x), from_oracle(f2, y), 10);
    CHECK(d == oracle::tree_distance(x, y));
    CHECK(d == distance(f2, from_oracle(f2, y), from_oracle(f2, x), 10));
  }
}

TEST_CASE("geodesic") {
  Group f2(GroupSpec::free(2));
  auto seg = geodesic(f2, Word{}, f2.parse("a b"));
  REQUIRE(seg.vertices.size() == 3);
  CHECK(f2.format(seg.vertices[1]) == "a");
  CHECK(geodesic(f2, f2.parse("b"), f2.parse("b")).vertices.size() == 1);

  Group z2(GroupSpec::lattice(2));
  auto lat = geodesic(z2, Word{}, z2.parse("a b"));
  CHECK(lat.length() == 2);
  CHECK(z2.format(lat.vertices[1]) == "a");

  Group s = surface_group();
  Ball b = ball(s, 2);
  for (std::size_t i = 0; i < b.size(); i += 7)
    for (std::size_t j = 0; j < b.size(); j += 11) {
      auto g = geodesic(s, b[i], b[j]);
      int d = distance_or_throw(s, b[i], b[j]);
      CHECK(static_cast<int>(g.length()) == d);
      for (const auto& v : g.vertices)
        CHECK(distance_or_throw(s, b[i], v) + distance_or_throw(s, v, b[j]) == d);
    }
}

TEST_CASE("gromov product") {
  Group f2(GroupSpec::free(2));
  CHECK(gromov_product(f2, f2.parse("a"), f2.parse("a b"), Word{}) == HalfInt(1));
  CHECK(gromov_product(f2, f2.parse("a"), f2.parse("a'"), Word{}) == HalfInt(0));
  Word x = f2.parse("b a a");
  CHECK(gromov_product(f2, x, x, f2.parse("a")) == HalfInt(distance_or_throw(f2, x, f2.parse("a"))));
  Group z2(GroupSpec::lattice(2));
  // Odd perimeters give half-integers.
  CHECK(gromov_product(z2, z2.parse("a"), z2.parse("b"), z2.parse("a'")) == HalfInt(1));
  Group fpc(GroupSpec::free_product_cyclic({3, 3}));
  CHECK(gromov_product(fpc, fpc.parse("a"), fpc.parse("a'"), Word{}).twice() == 1);
}

TEST_CASE("gromov products are nonnegative and symmetric on a ball") {
  for (auto spec : {GroupSpec::free(2), GroupSpec::lattice(2), GroupSpec::free_product_cyclic({3, 3})}) {
    Group g(spec);
    Ball b = ball(g, 2);
    for (const auto& x : b.elements())
      for (const auto& y : b.elements())
        for (std::size_t k = 0; k < b.size(); k += 3) {
          auto p = gromov_product(g, x, y, b[k]);
          CHECK(p >= HalfInt(0));
          CHECK(p == gromov_product(g, y, x, b[k]));
        }
  }
}

TEST_CASE("thin triangles on the tree: d(o, geodesic) equals the Gromov product") {
  // Free(2) is 0-hyperbolic, so d(o,g) - 2*0 <= (x,y)_o <= d(o,g) is an equality.
  Group f2(GroupSpec::free(2));
  Ball b = ball(f2, 4);
  for (const auto& x : b.elements())
    for (const auto& y : b.elements()) {
      auto seg = geodesic(f2, x, y);
      for (std::size_t k = 0; k < b.size(); k += 5) {
        const Word& o = b[k];
        int to_segment = 1 << 20;
        for (const auto& v : seg.vertices)
          to_segment = std::min(to_segment, distance_or_throw(f2, o, v));
        CHECK(gromov_product(f2, x, y, o) == HalfInt(to_segment));
      }
    }
}

TEST_CASE("delta estimation") {
  Group f2(GroupSpec::free(2));
  DeltaOptions exhaustive;
  exhaustive.exhaustive = true;
  CHECK(estimate_delta(f2, 0, exhaustive).value == HalfInt(0));
  auto tree = estimate_delta(f2, 4, exhaustive);
  CHECK(tree.value == HalfInt(0));
  CHECK(tree.sample_count == 0);

  Group z2(GroupSpec::lattice(2));
  // o=(0,0), x=(4,0), y=(4,4), z=(0,4) certifies 4.
  Word o{}, x = z2.parse("a a a a"), y = z2.parse("a a a a b b b b"), z = z2.parse("b b b b");
  HalfInt m = std::min(gromov_product(z2, x, y, o), gromov_product(z2, y, z, o));
  CHECK(m - gromov_product(z2, x, z, o) == HalfInt(4));

  HalfInt previous(0);
  for (int r : {2, 4, 6}) {
    auto est = estimate_delta(z2, r, exhaustive);
    CHECK(est.value >= previous);
    CHECK(est.value.twice() >= r);  // grows at least like R/2
    previous = est.value;
    // The witness reproduces the value.
    const auto& w = est.witness;
    REQUIRE(w.size() == 4);
    auto gap = [&](const Word& a, const Word& bb, const Word& c, const Word& base) {
      return std::min(gromov_product(z2, a, bb, base), gromov_product(z2, bb, c, base)) -
             gromov_product(z2, a, c, base);
    };
    HalfInt best(0);
    std::array<int, 4> idx{0, 1, 2, 3};
    do {
      best = std::max(best, gap(w[static_cast<std::size_t>(idx[0])], w[static_cast<std::size_t>(idx[1])],
                                w[static_cast<std::size_t>(idx[2])], w[static_cast<std::size_t>(idx[3])]));
    } while (std::next_permutation(idx.begin(), idx.end()));
    CHECK(best == est.value);
  }
}

TEST_CASE("four-point inequality holds with the estimated delta") {
  // (x,y)_o >= min{(x,z)_o, (y,z)_o} - 2*delta on a ball.
  for (auto spec : {GroupSpec::lattice(2), GroupSpec::free_product_cyclic({3, 3})}) {
    Group g(spec);
    DeltaOptions opt;
    opt.exhaustive = true;
    HalfInt d = estimate_delta(g, 2, opt).value;
    Ball b = ball(g, 2);
    for (const auto& x : b.elements())
      for (const auto& y : b.elements())
        for (std::size_t k = 0; k < b.size(); k += 2)
          for (std::size_t l = 0; l < b.size(); l += 3) {
            const Word& z = b[k];
            const Word& o = b[l];
            CHECK(gromov_product(g, x, y, o) >=
                  std::min(gromov_product(g, x, z, o), gromov_product(g, y, z, o)) - 2 * d);
          }
  }
}

TEST_CASE("sampled delta is deterministic and bounded by the exhaustive value") {
  Group z2(GroupSpec::lattice(2));
  DeltaOptions sampled;
  sampled.enumeration_budget = 10;
  sampled.samples = 20000;
  sampled.seed = 99;
  auto a = estimate_delta(z2, 4, sampled);
  auto b = estimate_delta(z2, 4, sampled);
  CHECK(a.sample_count == 20000);
  CHECK(a.value == b.value);
  CHECK(a.witness == b.witness);
  DeltaOptions full;
  full.exhaustive = true;
  CHECK(a.value <= estimate_delta(z2, 4, full).value);
  sampled.workers = 3;
  CHECK(estimate_delta(z2, 4, sampled).witness == a.witness);
}

TEST_CASE("thin triangles bound the four-point constant") {
  for (auto spec : {GroupSpec::lattice(2), GroupSpec::free(2), GroupSpec::free_product_cyclic({3, 3})}) {
    Group g(spec);
    DeltaOptions fp, tt;
    fp.exhaustive = tt.exhaustive = true;
    tt.method = DeltaMethod::ThinTriangle;
    for (int r : {1, 2, 3}) {
      auto four = estimate_delta(g, r, fp).value;
      auto thin = estimate_delta(g, r, tt).value;
      CHECK(four <= 3 * thin + HalfInt(1));
    }
  }
  Group f2(GroupSpec::free(2));
  DeltaOptions tt;
  tt.method = DeltaMethod::ThinTriangle;
  tt.exhaustive = true;
  CHECK(estimate_delta(f2, 3, tt).value == HalfInt(0));
}

TEST_CASE("surface group delta is small") {
  Group s = surface_group();
  DeltaOptions opt;
  opt.exhaustive = true;
  auto est = estimate_delta(s, 2, opt);
  CHECK(est.value >= HalfInt(0));
  CHECK(est.value <= HalfInt(2));
}
