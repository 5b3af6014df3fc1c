#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <unordered_map>
#include <vector>

#include "fatou/group.hpp"
#include "fatou/half_int.hpp"

namespace fatou {

inline constexpr std::size_t kDefaultBallBudget = 2'000'000;

/// Exhaustive ball around a center, with exact BFS distances and the
/// shortlex-least parent of every non-center element.
class Ball {
 public:
  const Word& center() const { return elements_.front(); }
  int radius() const { return radius_; }
  std::size_t size() const { return elements_.size(); }

  /// Elements in BFS order (layer by layer, shortlex within a layer).
  const std::vector<Word>& elements() const { return elements_; }
  const Word& operator[](std::size_t i) const { return elements_[i]; }

  bool contains(const Word& w) const { return index_.count(w) != 0; }
  std::optional<std::size_t> index_of(const Word& w) const;
  int distance(std::size_t i) const { return distance_[i]; }
  /// Distance from the center; throws InvalidArgument if w is not in the ball.
  int distance(const Word& w) const;
  /// Index of the BFS parent; empty for the center.
  std::optional<std::size_t> parent(std::size_t i) const;

  /// CSV with header "word,distance,parent".
  void write_csv(std::ostream& out, const Group& g) const;

 private:
  friend Ball ball(const Group&, int, const Word&, std::size_t);
  int radius_ = 0;
  std::vector<Word> elements_;
  std::vector<int> distance_;
  std::vector<std::ptrdiff_t> parent_;
  std::unordered_map<Word, std::size_t, WordHash> index_;
};

/// Upper bound (exact for trees and lattices) on |B(o,R)|.
double estimated_ball_size(const Group& g, int radius);

/// Breadth-first ball of radius R. Throws BudgetExceeded when the size
/// estimate exceeds the budget.
Ball ball(const Group& g, int radius, const Word& center = {},
          std::size_t budget = kDefaultBallBudget);

/// Exact d(x, y) when it is at most limit.
std::optional<int> distance(const Group& g, const Word& x, const Word& y, int limit);

/// Exact d(x, y); throws BudgetExceeded above limit.
int distance_or_throw(const Group& g, const Word& x, const Word& y, int limit = 64);

struct GeodesicSegment {
  std::vector<Word> vertices;
  std::size_t length() const { return vertices.empty() ? 0 : vertices.size() - 1; }
};

/// One geodesic from x to y; at each layer the shortlex-least predecessor
/// is chosen, so the result is deterministic.
GeodesicSegment geodesic(const Group& g, const Word& x, const Word& y, int limit = 64);

/// (x, y)_base = (d(x,base) + d(y,base) - d(x,y)) / 2, exactly.
HalfInt gromov_product(const Group& g, const Word& x, const Word& y, const Word& base,
                       int limit = 64);

}  // namespace fatou
