#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fatou/half_int.hpp"
#include "fatou/metric.hpp"
#include "fatou/parallel.hpp"

namespace fatou {

enum class DeltaMethod { FourPoint, ThinTriangle };

std::string to_string(DeltaMethod m);
DeltaMethod parse_delta_method(const std::string& text);

struct DeltaOptions {
  DeltaMethod method = DeltaMethod::FourPoint;
  /// Enumerate every configuration regardless of the enumeration budget.
  bool exhaustive = false;
  /// Largest number of unordered configurations enumerated before sampling.
  std::uint64_t enumeration_budget = 4'000'000'000ull;
  std::uint64_t samples = 1'000'000;
  std::uint64_t seed = 1;
  int workers = default_workers();
  std::size_t ball_budget = kDefaultBallBudget;
};

struct DeltaEstimate {
  HalfInt value;
  DeltaMethod method = DeltaMethod::FourPoint;
  int radius = 0;
  std::uint64_t sample_count = 0;  // 0 = exhaustive
  std::vector<Word> witness;       // configuration attaining the value
};

/// Hyperbolicity constant of the finite metric space B(o, R).
///
/// FourPoint: max over quadruples of min{(x,y)_w, (y,z)_w} - (x,z)_w, which
/// equals half the gap between the two largest of the three pair sums
/// d(x,y)+d(z,w), d(x,z)+d(y,w), d(x,w)+d(y,z).
/// ThinTriangle: max over triangles of the largest distance from a vertex of
/// one (shortlex) geodesic side to the union of the other two sides.
DeltaEstimate estimate_delta(const Group& g, int radius, const DeltaOptions& options = {});

}  // namespace fatou
