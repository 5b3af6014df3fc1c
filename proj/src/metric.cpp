#include "fatou/metric.hpp"

#include <cmath>
#include <string>
#include <unordered_set>

#include "fatou/error.hpp"

namespace fatou {

std::optional<std::size_t> Ball::index_of(const Word& w) const {
  auto it = index_.find(w);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int Ball::distance(const Word& w) const {
  auto i = index_of(w);
  if (!i) throw InvalidArgument("word is not in the ball");
  return distance_[*i];
}

std::optional<std::size_t> Ball::parent(std::size_t i) const {
  if (parent_[i] < 0) return std::nullopt;
  return static_cast<std::size_t>(parent_[i]);
}

void Ball::write_csv(std::ostream& out, const Group& g) const {
  out << "word,distance,parent\n";
  for (std::size_t i = 0; i < elements_.size(); ++i) {
    out << g.format(elements_[i]) << ',' << distance_[i] << ',';
    if (parent_[i] >= 0) out << g.format(elements_[static_cast<std::size_t>(parent_[i])]);
    out << '\n';
  }
}

double estimated_ball_size(const Group& g, int radius) {
  if (radius <= 0) return 1.0;
  if (g.kind() == GroupKind::Lattice) {
    // |{v in Z^d : |v|_1 <= R}| = sum_k 2^k C(d,k) C(R,k)
    const int d = g.generator_count();
    double total = 0.0;
    for (int k = 0; k <= std::min(d, radius); ++k) {
      double c1 = 1.0, c2 = 1.0;
      for (int i = 0; i < k; ++i) {
        c1 = c1 * (d - i) / (i + 1);
        c2 = c2 * (radius - i) / (i + 1);
      }
      total += std::pow(2.0, k) * c1 * c2;
    }
    return total;
  }
  const double z = static_cast<double>(g.generating_set().size());
  if (z <= 2.0) return 1.0 + z * radius;
  return 1.0 + z * (std::pow(z - 1.0, radius) - 1.0) / (z - 2.0);
}

Ball ball(const Group& g, int radius, const Word& center, std::size_t budget) {
  if (radius < 0) throw InvalidArgument("ball radius must be >= 0");
  double estimate = estimated_ball_size(g, radius);
  if (estimate > static_cast<double>(budget))
    throw BudgetExceeded("ball of radius " + std::to_string(radius) + " has ~" +
                         std::to_string(static_cast<long long>(estimate)) +
                         " elements, budget is " + std::to_string(budget));
  Ball b;
  b.radius_ = radius;
  b.elements_.push_back(center);
  b.distance_.push_back(0);
  b.parent_.push_back(-1);
  b.index_.emplace(center, 0);
  std::size_t layer_begin = 0;
  for (int d = 1; d <= radius; ++d) {
    std::size_t layer_end = b.elements_.size();
    // The previous layer is in shortlex order, so the first discoverer of a
    // new element is its shortlex-least parent.
    for (std::size_t i = layer_begin; i < layer_end; ++i) {
      for (auto& y : g.neighbors(b.elements_[i])) {
        if (b.index_.count(y)) continue;
        b.index_.emplace(y, b.elements_.size());
        b.elements_.push_back(std::move(y));
        b.distance_.push_back(d);
        b.parent_.push_back(static_cast<std::ptrdiff_t>(i));
      }
    }
    // Sort the new layer, keeping parent links and index in sync.
    std::vector<std::size_t> order(b.elements_.size() - layer_end);
    for (std::size_t k = 0; k < order.size(); ++k) order[k] = layer_end + k;
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t c) { return b.elements_[a] < b.elements_[c]; });
    std::vector<Word> words;
    std::vector<std::ptrdiff_t> parents;
    for (auto k : order) {
      words.push_back(std::move(b.elements_[k]));
      parents.push_back(b.parent_[k]);
    }
    for (std::size_t k = 0; k < order.size(); ++k) {
      b.elements_[layer_end + k] = std::move(words[k]);
      b.parent_[layer_end + k] = parents[k];
      b.index_[b.elements_[layer_end + k]] = layer_end + k;
    }
    layer_begin = layer_end;
    if (layer_begin == b.elements_.size()) break;
  }
  return b;
}

std::optional<int> distance(const Group& g, const Word& x, const Word& y, int limit) {
  Word t = g.quotient(x, y);
  if (g.geodesic_normal_form()) {
    int d = static_cast<int>(t.size());
    if (d > limit) return std::nullopt;
    return d;
  }
  if (t.empty()) return 0;
  std::unordered_set<Word, WordHash> seen{Word{}};
  std::vector<Word> layer{Word{}};
  for (int d = 1; d <= limit; ++d) {
    std::vector<Word> next;
    for (const auto& w : layer)
      for (auto& n : g.neighbors(w))
        if (seen.insert(n).second) {
          if (n == t) return d;
          next.push_back(std::move(n));
        }
    layer = std::move(next);
  }
  return std::nullopt;
}

int distance_or_throw(const Group& g, const Word& x, const Word& y, int limit) {
  auto d = distance(g, x, y, limit);
  if (!d) throw BudgetExceeded("distance exceeds limit " + std::to_string(limit));
  return *d;
}

GeodesicSegment geodesic(const Group& g, const Word& x, const Word& y, int limit) {
  Word t = g.quotient(x, y);
  GeodesicSegment seg;
  if (g.is_tree()) {
    for (std::size_t i = 0; i <= t.size(); ++i) seg.vertices.push_back(g.multiply(x, t.prefix(i)));
    return seg;
  }
  int k = distance_or_throw(g, Word{}, t, limit);
  std::vector<Word> path{t};
  Word cur = t;
  for (int d = k; d > 0; --d) {
    // neighbors() is shortlex sorted: the first one one step closer wins.
    bool found = false;
    for (auto& n : g.neighbors(cur)) {
      if (distance(g, Word{}, n, d - 1) == d - 1) {
        cur = std::move(n);
        found = true;
        break;
      }
    }
    if (!found) throw BudgetExceeded("geodesic reconstruction failed");
    path.push_back(cur);
  }
  for (auto it = path.rbegin(); it != path.rend(); ++it) seg.vertices.push_back(g.multiply(x, *it));
  return seg;
}

HalfInt gromov_product(const Group& g, const Word& x, const Word& y, const Word& base, int limit) {
  int dx = distance_or_throw(g, x, base, limit);
  int dy = distance_or_throw(g, y, base, limit);
  int dxy = distance_or_throw(g, x, y, limit);
  return HalfInt::from_twice(dx + dy - dxy);
}

}  // namespace fatou
