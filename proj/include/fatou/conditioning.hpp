#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fatou/boundary.hpp"
#include "fatou/potential.hpp"
#include "fatou/walk.hpp"

namespace fatou {

struct ConditioningOptions {
  /// Depth of the ray point standing in for theta; default radius + 10.
  std::optional<int> depth;
  /// The Green function toward ray(depth) is solved on B(o, depth + margin).
  int margin = 15;
  double stabilization_tol = 1e-6;
  LinearOptions linear;
};

/// Doob transform of nu by h = K(., theta(depth)):
/// p^theta(x, y) = p(x, y) h(y) / h(x), renormalized per row.
class ConditionedKernel {
 public:
  /// Conditioning toward theta, with h tabulated on B(o, depth + margin)
  /// and its stabilization in the depth recorded. Throws
  /// NonHyperbolicWarning on lattices and NotStabilized when K(., theta(n))
  /// still moves with n.
  static ConditionedKernel toward(const Group& g, const StepDistribution& nu, const BoundaryRay& theta,
                                  int radius, const ConditioningOptions& options = {});
  /// An arbitrary positive h; no stabilization report.
  static ConditionedKernel from_function(const StepDistribution& nu, TabulatedFunction h, std::string target);

  const std::optional<BoundaryRay>& theta() const { return theta_; }
  int depth() const { return depth_; }
  const TabulatedFunction& h() const { return h_; }
  const StepDistribution& base() const { return base_; }
  const std::optional<StabilizationReport>& stabilization() const { return stabilization_; }
  /// What the walk is conditioned toward, for reports.
  const std::string& target() const { return target_; }

  nlohmann::ordered_json to_json(const Group& g) const;

 private:
  std::optional<BoundaryRay> theta_;
  int depth_ = 0;
  TabulatedFunction h_;
  StepDistribution base_;
  std::optional<StabilizationReport> stabilization_;
  std::string target_;
};

/// One row of the transformed kernel.
struct HRow {
  std::vector<Word> targets;     // x z for z in the support of nu, in support order
  std::vector<double> weights;   // p(x, xz) h(xz) / h(x), before renormalization
  double row_sum = 0.0;
  double defect() const { return std::abs(row_sum - 1.0); }
  double probability(std::size_t i) const { return weights[i] / row_sum; }
};

/// Throws OutOfTabulatedRange, or DegenerateRow when h(x) <= 0 or the row
/// sum is below 1e-12.
HRow h_row(const Group& g, const ConditionedKernel& k, const Word& x);

/// p^theta(x, y) after renormalization; 0 if y is not reachable in one step.
double h_transition(const Group& g, const Word& x, const Word& y, const ConditionedKernel& k);

/// One step of the conditioned walk. The draw is compared with the
/// cumulative unnormalized weights, so a constant h repeats plain steps.
Word conditioned_step(const Group& g, const ConditionedKernel& k, const Word& x, RngStream& rng,
                      double* defect = nullptr);

Trajectory simulate_conditioned(const Group& g, const Word& z, const ConditionedKernel& k, const StopRule& stop,
                                RngStream& rng);

using TrajectoryFunctional = std::function<double(const Trajectory&)>;

struct DesintegrationOptions {
  std::uint64_t n_outer = 1000;
  std::uint64_t n_inner = 100;
  /// F must depend on X_0..X_horizon only.
  int horizon = 2;
  /// Radius of the exit proxy that freezes the sampled boundary point.
  int exit_radius = 12;
  std::uint64_t seed = 1;
  int workers = default_workers();
  ConditioningOptions conditioning;
};

struct DesintegrationReport {
  double left = 0.0, left_stderr = 0.0;
  double right = 0.0, right_stderr = 0.0;
  double z_score = 0.0;
  std::uint64_t n_outer = 0, n_inner = 0;
  double max_renorm_defect = 0.0;
  nlohmann::ordered_json to_json() const;
};

/// E_z[F] by plain Monte-Carlo against the mixture of E_z^theta[F] over
/// theta drawn from the harmonic measure (frozen exit rays).
DesintegrationReport desintegration_check(const Group& g, const StepDistribution& nu, const Word& z,
                                          const TrajectoryFunctional& f, const DesintegrationOptions& options);

}  // namespace fatou
