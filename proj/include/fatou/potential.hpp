#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fatou/boundary.hpp"
#include "fatou/parallel.hpp"
#include "fatou/tabulated.hpp"
#include "fatou/walk.hpp"

namespace fatou {

/// Delta f(x) = sum_z nu(z) f(xz) - f(x). Throws OutOfTabulatedRange.
double laplacian(const Group& g, const StepDistribution& nu, const TabulatedFunction& f, const Word& x);

struct HarmonicityReport {
  double max_residual = 0.0;
  Word worst;
  std::size_t checked = 0;
  double tol = 0.0;
  bool pass = true;
};

HarmonicityReport is_harmonic(const Group& g, const StepDistribution& nu, const TabulatedFunction& f,
                              const std::vector<Word>& region, double tol);

/// Settings shared by the Monte-Carlo estimators. Trajectory i of a batch
/// uses RngStream(seed, stream_offset + i).
struct McOptions {
  std::uint64_t n_traj = 100'000;
  std::uint64_t seed = 1;
  std::uint64_t stream_offset = 0;
  int workers = default_workers();
  std::int64_t step_cap = kDefaultStepCap;
};

struct GreenEstimate {
  Word x, y;
  double value = 0.0;
  double stderr_ = 0.0;      // Monte-Carlo only
  int truncation_radius = 0;  // visits are counted while d(o, X_n) <= R
  std::string method;
  std::uint64_t n_traj = 0;

  nlohmann::ordered_json to_json(const Group& g) const;
};

/// Mean number of visits to y before the walk from x leaves B(o, R).
GreenEstimate green_mc(const Group& g, const StepDistribution& nu, const Word& x, const Word& y, int radius,
                       const McOptions& options = {});
/// Same for several targets, from one batch of trajectories.
std::vector<GreenEstimate> green_mc_targets(const Group& g, const StepDistribution& nu, const Word& x,
                                            const std::vector<Word>& targets, int radius,
                                            const McOptions& options = {});

enum class SolverRoute { Auto, Explicit, Lumped };
std::string to_string(SolverRoute r);
SolverRoute parse_solver_route(const std::string& text);

struct LinearOptions {
  SolverRoute route = SolverRoute::Auto;
  /// Target for the largest relative residual of the fixed-point equations.
  double tolerance = 1e-13;
  std::int64_t max_sweeps = 2'000'000;
  std::size_t ball_budget = kDefaultBallBudget;
};

struct LinearSolution {
  TabulatedFunction f;
  double residual = 0.0;
  std::int64_t sweeps = 0;
  std::size_t unknowns = 0;
  SolverRoute route = SolverRoute::Explicit;
  int radius = 0;

  nlohmann::ordered_json to_json() const;
};

/// G_R(., y): expected visits to y while d(o, X_n) <= R, from the linear
/// system (I - P_R) G = 1_y solved by Gauss-Seidel. On trees with a
/// nearest-neighbour uniform law the Lumped route solves the same system
/// on orbits of the automorphisms fixing the geodesic [o, y].
LinearSolution green_linear(const Group& g, const StepDistribution& nu, const Word& y, int radius,
                            const LinearOptions& options = {});

struct MartinEstimate {
  double value = 0.0;
  double stderr_ = 0.0;
  std::string method;
};

enum class GreenMethod { MonteCarlo, Linear };

/// K(x, y) = G(x, y) / G(o, y). The linear route uses radius
/// max(|x|, |y|) + margin; Monte-Carlo throws DivisionUnstable when G(o, y)
/// is below ten standard errors.
MartinEstimate martin_kernel(const Group& g, const StepDistribution& nu, const Word& x, const Word& y,
                             GreenMethod method, int margin = 15, const McOptions& mc = {});

/// K(., y) as a function on B(o, R), from one linear solve.
TabulatedFunction martin_function(const Group& g, const StepDistribution& nu, const Word& y, int radius,
                                  const std::string& label, const LinearOptions& options = {});

struct StabilizationReport {
  std::vector<int> depths;
  std::vector<double> values;
  double value = 0.0;
  double max_deviation = 0.0;    // over successive depths
  double final_deviation = 0.0;  // last two depths
  double tol = 0.0;
  bool stabilized = true;

  nlohmann::ordered_json to_json() const;
};

/// K(x, theta(n)) for each depth n, each solved at radius n + margin.
/// Throws NotStabilized when the last successive relative deviation
/// exceeds tol.
StabilizationReport martin_kernel_at_boundary(const Group& g, const StepDistribution& nu, const Word& x,
                                              const BoundaryRay& theta, const std::vector<int>& depths,
                                              double tol = 1e-6, int margin = 15);

/// Bins of the exit proxy at radius R: the crossing of the geodesic
/// [o, proxy] with the sphere of radius t, or the first containing shadow.
struct Binning {
  enum class Kind { SphereCell, Shadows } kind = Kind::SphereCell;
  int t = 1;
  std::vector<Shadow> shadows;

  static Binning sphere(int t);
  static Binning of_shadows(std::vector<Shadow> shadows);
};

struct MeasureBin {
  std::string label;
  Word cell;
  std::uint64_t count = 0;
  double probability = 0.0;
  double sigma = 0.0;  // binomial standard error
};

struct HarmonicMeasureEstimate {
  Word z;
  int radius = 0;
  std::uint64_t n_traj = 0;
  std::vector<MeasureBin> bins;

  nlohmann::ordered_json to_json(const Group& g) const;
};

/// Sphere cell of an exit point (shortlex geodesic on non-tree backends).
Word sphere_cell(const Group& g, const Word& exit_point, int t);

HarmonicMeasureEstimate harmonic_measure(const Group& g, const StepDistribution& nu, const Word& z, int radius,
                                         const Binning& binning, const McOptions& options = {},
                                         HalfInt delta_hat = 0);

enum class PoissonMethod { MonteCarlo, LinearSolve };

struct PointEstimate {
  Word x;
  double value = 0.0;
  double stderr_ = 0.0;
  std::uint64_t count = 0;
};

struct PoissonResult {
  TabulatedFunction f;
  std::vector<PointEstimate> points;  // Monte-Carlo only
  LinearSolution solve;               // LinearSolve only
  PoissonMethod method = PoissonMethod::LinearSolve;
  int radius = 0;
};

/// f_E(x) = P_x(exit proxy at radius R lies in E). LinearSolve solves the
/// Dirichlet problem on B(o, R-1) with data 1_E for d(o, x) >= R;
/// Monte-Carlo estimates f_E at the given points.
PoissonResult poisson_integral(const Group& g, const StepDistribution& nu, const BoundarySet& e, int radius,
                               PoissonMethod method, const std::vector<Word>& points = {},
                               const McOptions& mc = {}, const LinearOptions& linear = {},
                               HalfInt delta_hat = 0);

struct MartingaleReport {
  /// Largest |E[f(X_{n+1}) | X_n = x] - f(x) - Delta f(x)| over visited x.
  double max_identity_error = 0.0;
  std::vector<double> mean_increment;  // mean of M_n - M_0
  std::vector<double> stderr_increment;
  double max_abs_z = 0.0;
  std::size_t trajectories = 0;
  bool pass = true;
};

/// M_n = f(X_n) - sum_{k<n} Delta f(X_k), held constant after a
/// trajectory ends.
MartingaleReport martingale_check(const Group& g, const StepDistribution& nu, const TabulatedFunction& f,
                                  const std::vector<Trajectory>& trajectories, double z_limit = 3.0);

}  // namespace fatou
