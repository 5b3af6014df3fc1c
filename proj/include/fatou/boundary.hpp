#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fatou/group.hpp"
#include "fatou/half_int.hpp"
#include "fatou/metric.hpp"

namespace fatou {

/// A computable boundary point: the geodesic ray spelled by stem followed
/// by period repeated forever. ray(0) = e and d(e, ray(n)) = n.
class BoundaryRay {
 public:
  enum class Type { Periodic, Frozen };

  BoundaryRay() = default;

  /// The ray w w w ...; throws InvalidArgument unless |w^n| = n|w|.
  static BoundaryRay periodic(const Group& g, const Word& period);
  /// Geodesic from e to anchor, continued by the shortlex-least period of
  /// length 1..3 that keeps the word geodesic.
  static BoundaryRay frozen(const Group& g, const Word& anchor);

  Type type() const { return type_; }
  const std::vector<Letter>& stem() const { return stem_; }
  const std::vector<Letter>& period() const { return period_; }

  /// The n-th letter of the infinite geodesic word.
  Letter letter(std::size_t n) const {
    return n < stem_.size() ? stem_[n] : period_[(n - stem_.size()) % period_.size()];
  }
  Word point(const Group& g, int n) const;

  std::string description(const Group& g) const;
  nlohmann::ordered_json to_json(const Group& g) const;
  static BoundaryRay from_json(const Group& g, const nlohmann::json& j);

  friend bool operator==(const BoundaryRay&, const BoundaryRay&) = default;

 private:
  Type type_ = Type::Periodic;
  std::vector<Letter> stem_;
  std::vector<Letter> period_;
};

/// Stabilization depth for products against ray points.
int default_depth(int distance_to_x, HalfInt c, HalfInt delta_hat);

/// (x, theta)_o approximated by (x, ray(depth))_o.
HalfInt gromov_product_to_ray(const Group& g, const Word& x, const BoundaryRay& theta,
                              const Word& o, int depth);

/// (theta1, theta2)_o approximated at the given depth. Exact on trees.
HalfInt gromov_product_rays(const Group& g, const BoundaryRay& a, const BoundaryRay& b,
                            const Word& o, int depth);

enum class TubeVerdict { In, Out, Uncertain };
std::string to_string(TubeVerdict v);

/// The tube Gamma_c^theta of points at distance < c from the ray.
struct TubeSpec {
  TubeSpec(BoundaryRay theta, HalfInt c);
  BoundaryRay theta;
  HalfInt c;
};

/// Three-valued tube membership. On tree backends the distance to the ray
/// is computed exactly; otherwise (o,theta)_x is compared with c -+ 2 delta.
TubeVerdict in_tube(const Group& g, const Word& x, const TubeSpec& tube, const Word& o,
                    HalfInt delta_hat, std::optional<int> depth = std::nullopt);

/// Exact distance from x to the ray on tree backends.
int tree_distance_to_ray(const Group& g, const Word& x, const BoundaryRay& theta);

struct TubePoints {
  std::vector<Word> in;
  std::vector<Word> uncertain;
};

/// Classifies every element of a ball.
TubePoints tube_points(const Group& g, const TubeSpec& tube, const Ball& ball, HalfInt delta_hat);

/// Tube points with d(o,x) <= radius, found around the ray without
/// materializing the whole ball. Sorted by shortlex.
TubePoints tube_points(const Group& g, const TubeSpec& tube, int radius, HalfInt delta_hat);

/// Points with d(o,x) > R.
std::vector<Word> spike(const Group& g, const std::vector<Word>& points, int radius,
                        const Word& o = {});

/// V_r(base) = {y : (base, y)_o >= r}; base is a word or a ray.
struct Shadow {
  std::optional<Word> word;
  std::optional<BoundaryRay> ray;
  HalfInt r;

  static Shadow of_word(Word w, HalfInt r);
  static Shadow of_ray(BoundaryRay theta, HalfInt r);
  /// On trees V_{|w|}(w) is the set of ends through w.
  static Shadow cylinder(Word w);
  std::string label(const Group& g) const;
};

struct ShadowVerdict {
  bool contains = false;
  /// The product fell inside the +-2 delta band and was resolved to false.
  bool uncertain = false;
  HalfInt product;
};

ShadowVerdict shadow_contains(const Group& g, const Shadow& s, const Word& y, const Word& o,
                              HalfInt delta_hat, int depth);
ShadowVerdict shadow_contains(const Group& g, const Shadow& s, const BoundaryRay& y,
                              const Word& o, HalfInt delta_hat, int depth);

/// A boundary set: empty, everything, or a finite union of shadows.
class BoundarySet {
 public:
  static BoundarySet empty();
  static BoundarySet full();
  static BoundarySet of(std::vector<Shadow> shadows);

  bool is_empty() const { return !full_ && shadows_.empty(); }
  bool is_full() const { return full_; }
  const std::vector<Shadow>& shadows() const { return shadows_; }

  /// Membership of the frozen ray through an exit point.
  bool contains(const Group& g, const Word& exit_point, HalfInt delta_hat = 0) const;
  bool contains(const Group& g, const BoundaryRay& theta, HalfInt delta_hat = 0,
                int depth = 32) const;
  std::string label(const Group& g) const;

 private:
  bool full_ = false;
  std::vector<Shadow> shadows_;
};

/// Membership in Gamma_c(E), the union of the tubes toward points of E.
/// The distance to the rays through a shadow V_r(w) is 0 when (x,w)_o >= r
/// and |x| - (x,w)_o otherwise, exact on trees; elsewhere a 4 delta band
/// is Uncertain.
TubeVerdict in_tube_of_set(const Group& g, const Word& x, const BoundarySet& e, HalfInt c,
                           HalfInt delta_hat);

}  // namespace fatou
