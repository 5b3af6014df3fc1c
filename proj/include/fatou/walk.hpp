#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fatou/error.hpp"
#include "fatou/group.hpp"
#include "fatou/metric.hpp"
#include "fatou/rng.hpp"

namespace fatou {

class TabulatedFunction;

/// Exact probability num/den, den > 0.
struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;

  double value() const { return static_cast<double>(num) / static_cast<double>(den); }
  std::string str() const;
  static Rational parse(const std::string& text);
  friend bool operator==(const Rational&, const Rational&) = default;
};

struct StepEntry {
  Word z;
  double p = 0.0;
  std::optional<Rational> exact;
};

/// The step law nu on S; p(x, y) = nu(x^{-1} y).
class StepDistribution {
 public:
  /// Uniform on the generating set.
  static StepDistribution srw(const Group& g);
  /// Holds with probability `hold`, otherwise a uniform generator step.
  static StepDistribution lazy(const Group& g, Rational hold = {1, 2});
  static StepDistribution point_mass(const Group& g, const Word& z);
  /// Duplicate words are merged; probabilities must be positive and sum to 1.
  static StepDistribution from_entries(const Group& g, std::vector<StepEntry> entries,
                                       std::string label = "custom");
  /// "srw", "lazy", "lazy:1/3", or "a:1/2, a':1/4, b b:1/4".
  static StepDistribution parse(const Group& g, const std::string& text);

  const std::vector<StepEntry>& support() const { return entries_; }
  const std::string& label() const { return label_; }
  int m1() const { return m1_; }
  bool symmetric() const { return symmetric_; }
  bool exact() const { return exact_; }
  double probability(const Word& z) const;

  /// Holding mass p0 and per-generator mass q when nu is p0 delta_e plus
  /// q on every generator; such laws commute with tree automorphisms.
  std::optional<std::pair<double, double>> nearest_neighbour_uniform(const Group& g) const;

  /// Index of the entry selected by a uniform draw u in [0,1).
  std::size_t pick(double u) const {
    const double t = u * total_;
    std::size_t i = 0;
    while (i + 1 < cumulative_.size() && t >= cumulative_[i]) ++i;
    return i;
  }
  const std::vector<double>& cumulative() const { return cumulative_; }

  nlohmann::ordered_json to_json(const Group& g) const;

 private:
  void finish(const Group& g);

  std::vector<StepEntry> entries_;
  std::vector<double> cumulative_;
  std::vector<std::optional<Letter>> single_letter_;
  double total_ = 1.0;
  std::string label_;
  int m1_ = 0;
  bool symmetric_ = false;
  bool exact_ = false;

  friend Word step(const Group&, const StepDistribution&, const Word&, RngStream&);
};

struct AdmissibilityReport {
  int m1 = 0;
  int l = 0;
  double c0 = 0.0;
  std::optional<Rational> c0_exact;
  bool pass = false;
  int check_radius = 1;
  Word center;
  std::string diagnosis;

  nlohmann::ordered_json to_json(const Group& g) const;
};

/// Least l <= l_cap and largest c0 with sum_{1<=j<=l} p^j(x, y) >= c0 for
/// every y with d(x, y) <= 1, x = center. Throws NotGenerating when the
/// support does not reach every element of B(center, check_radius).
AdmissibilityReport validate(const StepDistribution& nu, const Group& g, int l_cap = 8,
                             const Word& center = {}, int check_radius = 1);

/// normalize(x z) with z ~ nu.
Word step(const Group& g, const StepDistribution& nu, const Word& x, RngStream& rng);

inline constexpr std::int64_t kDefaultStepCap = 10'000'000;

/// FixedSteps(n), ExitBall(R) or the first of both. ExitBall stops at the
/// first n with d(o, X_n) >= R.
struct StopRule {
  std::optional<std::int64_t> steps;
  std::optional<int> exit_radius;
  std::int64_t hard_cap = kDefaultStepCap;

  static StopRule fixed(std::int64_t n) { return {n, std::nullopt}; }
  static StopRule exit_ball(int r) { return {std::nullopt, r}; }
  static StopRule first_of(std::int64_t n, int r) { return {n, r}; }
  std::string str() const;
};

/// Decides d(e, x) >= R. Non-geodesic normal forms use a precomputed ball.
class ExitTest {
 public:
  ExitTest(const Group& g, std::optional<int> radius);
  bool outside(const Word& x) const {
    if (!radius_) return false;
    if (!ball_) return static_cast<int>(x.size()) >= *radius_;
    return !ball_->contains(x);
  }

 private:
  std::optional<int> radius_;
  std::optional<Ball> ball_;
};

struct Trajectory {
  Word start;
  std::vector<Word> positions;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;
  /// Description of the conditioning target, if any.
  std::optional<std::string> conditioned;
  int conditioned_depth = 0;
  /// Largest |row sum - 1| of the h-transformed kernel along the path.
  double renorm_defect = 0.0;

  std::int64_t steps() const { return static_cast<std::int64_t>(positions.size()) - 1; }
  nlohmann::ordered_json to_json(const Group& g) const;
};

/// Runs the walk and calls visit(x, n) on every position, start included.
/// Returns the number of steps. Positions are not stored.
template <class Stepper, class Visit>
std::int64_t walk_streaming(Word x, const StopRule& stop, const ExitTest& exit, Stepper&& next,
                            Visit&& visit) {
  std::int64_t n = 0;
  visit(x, n);
  while (true) {
    if (stop.exit_radius && exit.outside(x)) return n;
    if (stop.steps && n >= *stop.steps) return n;
    if (n >= stop.hard_cap) {
      if (!stop.exit_radius) return n;
      throw StepBudgetExceeded("exit not reached within " + std::to_string(stop.hard_cap) + " steps");
    }
    x = next(x);
    ++n;
    visit(x, n);
  }
}

Trajectory simulate(const Group& g, const StepDistribution& nu, const Word& z, const StopRule& stop,
                    RngStream& rng);
Trajectory simulate(const Group& g, const StepDistribution& nu, const Word& z, const StopRule& stop,
                    const ExitTest& exit, RngStream& rng);

/// X_n at the first n with d(o, X_n) >= R. Throws NeverExited.
Word exit_proxy(const Group& g, const Trajectory& t, int radius, const Word& o = {});

/// T_m = inf{n : max{|u(y)| : d(y, X_n) <= m1} > m}; empty means infinity.
std::optional<std::int64_t> stopping_time_Tm(const Group& g, const Trajectory& t,
                                             const TabulatedFunction& u, double m, int m1);

}  // namespace fatou
