#include "fatou/boundary.hpp"

#include <algorithm>
#include <unordered_set>

#include "fatou/error.hpp"

namespace fatou {

namespace {

// Normal forms of SmallCancellation words need not be geodesic; their
// lengths are only checked up to this size (BFS cost grows fast).
constexpr std::size_t kSmallCancellationCheck = 6;

bool is_geodesic_word(const Group& g, const std::vector<Letter>& letters) {
  Word w = g.normalize(letters);
  if (g.geodesic_normal_form()) return w.size() == letters.size();
  if (letters.size() > kSmallCancellationCheck) return true;
  return g.word_length(w) == static_cast<int>(letters.size());
}

bool extends_geodesically(const Group& g, const std::vector<Letter>& stem,
                          const std::vector<Letter>& period) {
  std::vector<Letter> w = stem;
  // enough repetitions to expose cancellation across period boundaries
  const std::size_t reps = std::max<std::size_t>(3, 8 / period.size() + 1);
  for (std::size_t k = 0; k < reps; ++k) {
    w.insert(w.end(), period.begin(), period.end());
    if (!g.geodesic_normal_form() && w.size() > std::max(kSmallCancellationCheck, stem.size() + 2 * period.size()))
      break;
    if (!is_geodesic_word(g, w)) return false;
  }
  return true;
}

std::string format_letters(const Group& g, const std::vector<Letter>& letters) {
  return g.format(Word(letters));
}

void require_hyperbolic(const Group& g, const char* what) {
  if (g.is_lattice())
    throw NonHyperbolicWarning(std::string(what) + " on a lattice backend is not meaningful");
}

}  // namespace

BoundaryRay BoundaryRay::periodic(const Group& g, const Word& period) {
  if (period.empty()) throw InvalidArgument("periodic ray needs a non-empty period");
  if (!extends_geodesically(g, {}, period.letters()))
    throw InvalidArgument("powers of '" + g.format(period) + "' are not geodesic");
  BoundaryRay ray;
  ray.type_ = Type::Periodic;
  ray.period_ = period.letters();
  return ray;
}

BoundaryRay BoundaryRay::frozen(const Group& g, const Word& anchor) {
  BoundaryRay ray;
  ray.type_ = Type::Frozen;
  if (g.geodesic_normal_form()) {
    ray.stem_ = anchor.letters();
  } else {
    auto seg = geodesic(g, Word{}, anchor);
    for (std::size_t i = 1; i < seg.vertices.size(); ++i) {
      Word step = g.quotient(seg.vertices[i - 1], seg.vertices[i]);
      ray.stem_.push_back(step[0]);
    }
  }
  const auto& z = g.generating_set();
  std::vector<Letter> candidate;
  for (std::size_t len = 1; len <= 3; ++len) {
    candidate.assign(len, 0);
    std::vector<std::size_t> idx(len, 0);
    while (true) {
      for (std::size_t i = 0; i < len; ++i) candidate[i] = z[idx[i]];
      if (extends_geodesically(g, ray.stem_, candidate)) {
        ray.period_ = candidate;
        return ray;
      }
      std::size_t i = len;
      while (i > 0 && ++idx[i - 1] == z.size()) idx[--i] = 0;
      if (i == 0) break;
    }
  }
  throw InvalidArgument("no geodesic continuation of '" + g.format(anchor) + "'");
}

Word BoundaryRay::point(const Group& g, int n) const {
  if (n < 0) throw InvalidArgument("ray index must be >= 0");
  std::vector<Letter> letters(static_cast<std::size_t>(n));
  for (std::size_t i = 0; i < letters.size(); ++i) letters[i] = letter(i);
  return g.normalize(letters);
}

std::string BoundaryRay::description(const Group& g) const {
  std::string tail = "(" + format_letters(g, period_) + ")^inf";
  if (type_ == Type::Periodic) return tail;
  return "frozen[" + format_letters(g, stem_) + "] " + tail;
}

nlohmann::ordered_json BoundaryRay::to_json(const Group& g) const {
  nlohmann::ordered_json j;
  j["type"] = type_ == Type::Periodic ? "periodic" : "frozen";
  j["word"] = format_letters(g, type_ == Type::Periodic ? period_ : stem_);
  j["period"] = format_letters(g, period_);
  return j;
}

BoundaryRay BoundaryRay::from_json(const Group& g, const nlohmann::json& j) {
  const std::string type = j.at("type").get<std::string>();
  const std::string word = j.at("word").get<std::string>();
  if (type == "periodic") return periodic(g, Word(g.parse_letters(word)));
  if (type != "frozen") throw InvalidArgument("unknown ray type '" + type + "'");
  BoundaryRay ray = frozen(g, g.parse(word));
  if (j.contains("period")) {
    auto p = g.parse_letters(j.at("period").get<std::string>());
    if (!extends_geodesically(g, ray.stem_, p))
      throw InvalidArgument("period does not continue the stem geodesically");
    ray.period_ = p;
  }
  return ray;
}

int default_depth(int distance_to_x, HalfInt c, HalfInt delta_hat) {
  return distance_to_x + static_cast<int>(c.ceil()) + static_cast<int>((8 * delta_hat).ceil()) + 4;
}

HalfInt gromov_product_to_ray(const Group& g, const Word& x, const BoundaryRay& theta,
                              const Word& o, int depth) {
  if (g.is_tree() && o.empty()) {
    std::size_t k = 0;
    const std::size_t cap = std::min<std::size_t>(x.size(), static_cast<std::size_t>(std::max(depth, 0)));
    while (k < cap && x[k] == theta.letter(k)) ++k;
    return HalfInt(static_cast<int>(k));
  }
  return gromov_product(g, x, theta.point(g, depth), o, 2 * depth + 64);
}

HalfInt gromov_product_rays(const Group& g, const BoundaryRay& a, const BoundaryRay& b,
                            const Word& o, int depth) {
  if (g.is_tree() && o.empty()) {
    int k = 0;
    while (k < depth && a.letter(static_cast<std::size_t>(k)) == b.letter(static_cast<std::size_t>(k))) ++k;
    return HalfInt(k);
  }
  return gromov_product(g, a.point(g, depth), b.point(g, depth), o, 2 * depth + 64);
}

std::string to_string(TubeVerdict v) {
  switch (v) {
    case TubeVerdict::In: return "in";
    case TubeVerdict::Out: return "out";
    case TubeVerdict::Uncertain: return "uncertain";
  }
  return "?";
}

TubeSpec::TubeSpec(BoundaryRay t, HalfInt radius) : theta(std::move(t)), c(radius) {
  if (c <= HalfInt(0)) throw InvalidArgument("tube radius must be > 0, got " + c.str());
}

int tree_distance_to_ray(const Group& g, const Word& x, const BoundaryRay& theta) {
  if (!g.is_tree()) throw InvalidArgument("exact ray distance needs a tree backend");
  std::size_t k = 0;
  while (k < x.size() && x[k] == theta.letter(k)) ++k;
  return static_cast<int>(x.size() - k);
}

TubeVerdict in_tube(const Group& g, const Word& x, const TubeSpec& tube, const Word& o,
                    HalfInt delta_hat, std::optional<int> depth) {
  require_hyperbolic(g, "tube membership");
  if (g.is_tree() && o.empty())
    return HalfInt(tree_distance_to_ray(g, x, tube.theta)) < tube.c ? TubeVerdict::In : TubeVerdict::Out;
  const int dx = distance_or_throw(g, o, x, 256);
  const int n = depth.value_or(default_depth(dx, tube.c, delta_hat));
  // (o, theta)_x
  const Word far = tube.theta.point(g, n);
  const HalfInt p = gromov_product(g, o, far, x, 2 * n + 64);
  if (p < tube.c - 2 * delta_hat) return TubeVerdict::In;
  if (p >= tube.c + 2 * delta_hat) return TubeVerdict::Out;
  return TubeVerdict::Uncertain;
}

TubePoints tube_points(const Group& g, const TubeSpec& tube, const Ball& ball, HalfInt delta_hat) {
  TubePoints out;
  for (const auto& x : ball.elements()) {
    switch (in_tube(g, x, tube, ball.center(), delta_hat)) {
      case TubeVerdict::In: out.in.push_back(x); break;
      case TubeVerdict::Uncertain: out.uncertain.push_back(x); break;
      case TubeVerdict::Out: break;
    }
  }
  return out;
}

TubePoints tube_points(const Group& g, const TubeSpec& tube, int radius, HalfInt delta_hat) {
  require_hyperbolic(g, "tube enumeration");
  // Uncertain points satisfy d(x, ray) < c + 4 delta.
  const int reach = static_cast<int>((tube.c + 4 * delta_hat).ceil()) - 1;
  std::unordered_set<Word, WordHash> seen;
  std::vector<Word> candidates;
  for (int n = 0; n <= radius + reach; ++n) {
    Ball around = ball(g, reach, tube.theta.point(g, n));
    for (const auto& x : around.elements()) {
      const int len = g.geodesic_normal_form() ? static_cast<int>(x.size()) : g.word_length(x);
      if (len <= radius && seen.insert(x).second) candidates.push_back(x);
    }
  }
  std::sort(candidates.begin(), candidates.end());
  TubePoints out;
  for (auto& x : candidates) {
    switch (in_tube(g, x, tube, Word{}, delta_hat)) {
      case TubeVerdict::In: out.in.push_back(std::move(x)); break;
      case TubeVerdict::Uncertain: out.uncertain.push_back(std::move(x)); break;
      case TubeVerdict::Out: break;
    }
  }
  return out;
}

std::vector<Word> spike(const Group& g, const std::vector<Word>& points, int radius, const Word& o) {
  std::vector<Word> out;
  for (const auto& x : points) {
    int d;
    if (o.empty() && g.geodesic_normal_form())
      d = static_cast<int>(x.size());
    else
      d = distance_or_throw(g, o, x, 256);
    if (d > radius) out.push_back(x);
  }
  return out;
}

Shadow Shadow::of_word(Word w, HalfInt r) {
  if (r < HalfInt(0)) throw InvalidArgument("shadow threshold must be >= 0");
  Shadow s;
  s.word = std::move(w);
  s.r = r;
  return s;
}

Shadow Shadow::of_ray(BoundaryRay theta, HalfInt r) {
  if (r < HalfInt(0)) throw InvalidArgument("shadow threshold must be >= 0");
  Shadow s;
  s.ray = std::move(theta);
  s.r = r;
  return s;
}

Shadow Shadow::cylinder(Word w) {
  const int n = static_cast<int>(w.size());
  return of_word(std::move(w), HalfInt(n));
}

std::string Shadow::label(const Group& g) const {
  if (word) {
    if (r == HalfInt(static_cast<int>(word->size()))) return "cyl(" + g.format(*word) + ")";
    return "V_" + r.str() + "(" + g.format(*word) + ")";
  }
  return "V_" + r.str() + "(" + ray->description(g) + ")";
}

namespace {

ShadowVerdict resolve(HalfInt p, HalfInt r, HalfInt delta_hat) {
  ShadowVerdict v;
  v.product = p;
  if (r <= HalfInt(0)) {
    v.contains = true;
    return v;
  }
  v.contains = p >= r + 2 * delta_hat;
  v.uncertain = !v.contains && p >= r - 2 * delta_hat && delta_hat > HalfInt(0);
  return v;
}

}  // namespace

ShadowVerdict shadow_contains(const Group& g, const Shadow& s, const Word& y, const Word& o,
                              HalfInt delta_hat, int depth) {
  HalfInt p = s.word ? gromov_product(g, *s.word, y, o, 2 * depth + 64)
                     : gromov_product_to_ray(g, y, *s.ray, o, depth);
  return resolve(p, s.r, delta_hat);
}

ShadowVerdict shadow_contains(const Group& g, const Shadow& s, const BoundaryRay& y, const Word& o,
                              HalfInt delta_hat, int depth) {
  HalfInt p = s.word ? gromov_product_to_ray(g, *s.word, y, o, depth)
                     : gromov_product_rays(g, *s.ray, y, o, depth);
  return resolve(p, s.r, delta_hat);
}

BoundarySet BoundarySet::empty() { return {}; }

BoundarySet BoundarySet::full() {
  BoundarySet s;
  s.full_ = true;
  return s;
}

BoundarySet BoundarySet::of(std::vector<Shadow> shadows) {
  BoundarySet s;
  s.shadows_ = std::move(shadows);
  return s;
}

bool BoundarySet::contains(const Group& g, const Word& exit_point, HalfInt delta_hat) const {
  if (full_) return true;
  for (const auto& s : shadows_) {
    const int depth = default_depth(static_cast<int>(exit_point.size()), s.r, delta_hat);
    if (shadow_contains(g, s, exit_point, Word{}, delta_hat, depth).contains) return true;
  }
  return false;
}

bool BoundarySet::contains(const Group& g, const BoundaryRay& theta, HalfInt delta_hat, int depth) const {
  if (full_) return true;
  for (const auto& s : shadows_) {
    int d = depth;
    if (s.word) d = std::max(d, default_depth(static_cast<int>(s.word->size()), s.r, delta_hat));
    if (shadow_contains(g, s, theta, Word{}, delta_hat, d).contains) return true;
  }
  return false;
}

std::string BoundarySet::label(const Group& g) const {
  if (full_) return "full";
  if (shadows_.empty()) return "empty";
  std::string out;
  for (const auto& s : shadows_) {
    if (!out.empty()) out += " u ";
    out += s.label(g);
  }
  return out;
}

TubeVerdict in_tube_of_set(const Group& g, const Word& x, const BoundarySet& e, HalfInt c,
                           HalfInt delta_hat) {
  require_hyperbolic(g, "tube membership");
  if (e.is_full()) return TubeVerdict::In;
  if (e.is_empty()) return TubeVerdict::Out;
  const int len = g.geodesic_normal_form() ? static_cast<int>(x.size()) : g.word_length(x);
  bool uncertain = false;
  for (const auto& s : e.shadows()) {
    const int depth = default_depth(len, c + s.r, delta_hat);
    HalfInt p = s.word ? gromov_product(g, x, *s.word, Word{}, 2 * depth + 64)
                       : gromov_product_to_ray(g, x, *s.ray, Word{}, depth);
    HalfInt reach = p >= s.r ? HalfInt(0) : HalfInt(len) - p;
    if (reach + 4 * delta_hat < c) return TubeVerdict::In;
    if (reach - 4 * delta_hat < c) uncertain = true;
  }
  return uncertain ? TubeVerdict::Uncertain : TubeVerdict::Out;
}

}  // namespace fatou
