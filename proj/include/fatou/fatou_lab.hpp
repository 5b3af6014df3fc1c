#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fatou/boundary.hpp"
#include "fatou/conditioning.hpp"
#include "fatou/potential.hpp"
#include "fatou/tabulated.hpp"
#include "fatou/walk.hpp"

namespace fatou {

/// Points with r1 <= d(o, x) <= r2.
struct Annulus {
  int r1 = 0;
  int r2 = 0;
};

/// Consecutive annuli of the given width covering [first, last].
std::vector<Annulus> make_annuli(int first, int last, int width);

struct NtOptions {
  /// Number of outermost annuli the verdicts look at.
  int window = 3;
  /// bounded: sup growth over the window <= growth_tol * sup.
  double growth_tol = 0.01;
  /// convergent: oscillation over the window <= conv_tol * (1 + |limit|).
  double conv_tol = 0.02;
  HalfInt delta_hat = 0;
};

struct NtVerdicts {
  bool bounded = false;
  /// The last annulus attains the global sup within 1%.
  bool saturating = false;
  bool convergent = false;
  std::optional<double> limit;
};

/// sup |u| and oscillation of u over the tube points in each annulus.
struct NtReport {
  BoundaryRay theta;
  HalfInt c;
  std::vector<Annulus> radii;
  std::vector<double> sup_per_annulus;
  std::vector<double> osc_per_annulus;
  std::vector<double> min_per_annulus;
  std::vector<double> max_per_annulus;
  std::vector<std::size_t> points_per_annulus;
  std::vector<std::size_t> uncertain_per_annulus;
  /// Indices of annuli without In points; verdicts are then censored.
  std::vector<std::size_t> empty_annuli;
  bool censored = false;
  NtVerdicts verdicts;
  nlohmann::ordered_json to_json(const Group& g) const;
};

/// Throws OutOfTabulatedRange if u is not known on a tube point.
NtReport nt_report(const Group& g, const TabulatedFunction& u, const TubeSpec& tube,
                   const std::vector<Annulus>& annuli, const NtOptions& options = {});

struct StochasticOptions {
  std::uint64_t n_traj = 1000;
  std::uint64_t seed = 1;
  std::uint64_t stream_offset = 0;
  int exit_radius = 15;
  /// Positions at the end of each trajectory used for the oscillation.
  int window = 5;
  double conv_tol = 0.02;
  /// Threshold for the bounded fraction; infinity counts every finite sup.
  double bound = std::numeric_limits<double>::infinity();
  int workers = default_workers();
};

struct StochasticReport {
  std::string target;
  std::uint64_t n_traj = 0;
  /// Per trajectory: sup of |u| over the m1-thickened path.
  std::vector<double> sup_thickened;
  /// Per trajectory: sup of |u(X_n)|.
  std::vector<double> sup_path;
  std::vector<double> tail_osc;
  std::vector<double> tail_limit;
  /// Trajectories that left the domain of u.
  std::uint64_t censored = 0;
  double fraction_bounded = 0.0;
  double fraction_convergent = 0.0;
  nlohmann::ordered_json to_json() const;
};

/// u along h-conditioned walks from z until they leave B(o, exit_radius).
StochasticReport stochastic_report(const Group& g, const TabulatedFunction& u, const ConditionedKernel& k,
                                   const Word& z, const StochasticOptions& options = {});

/// Frozen exit rays of plain walks from z, one per stream.
std::vector<BoundaryRay> sample_boundary_rays(const Group& g, const StepDistribution& nu, std::size_t n,
                                              int exit_radius, std::uint64_t seed, const Word& z = {});

struct TheoremOptions {
  std::size_t n_thetas = 200;
  std::vector<HalfInt> c_list{HalfInt(1), HalfInt(2)};
  /// Outer radius of the annuli; rays are frozen beyond it.
  int radius = 20;
  int annulus_width = 2;
  std::uint64_t seed = 1;
  /// theta with (theta, pole)_o >= pole_depth is censored.
  std::vector<BoundaryRay> poles;
  int pole_depth = 3;
  NtOptions nt;
};

/// Counts of (bounded, convergent) verdicts.
struct Contingency {
  std::uint64_t bounded_convergent = 0;
  std::uint64_t bounded_not_convergent = 0;
  std::uint64_t not_bounded_convergent = 0;
  std::uint64_t not_bounded_not_convergent = 0;
  std::uint64_t censored = 0;
  std::uint64_t total() const {
    return bounded_convergent + bounded_not_convergent + not_bounded_convergent + not_bounded_not_convergent +
           censored;
  }
  void add(const NtVerdicts& v);
  nlohmann::ordered_json to_json() const;
};

struct TheoremReport {
  std::string function_label;
  std::vector<HalfInt> c_list;
  std::vector<Contingency> per_c;
  Contingency pooled;
  /// theta censored near a pole (for every c).
  std::uint64_t pole_censored = 0;
  double censored_fraction = 0.0;
  std::vector<std::string> censor_reasons;
  /// The off-diagonal cell is empty.
  bool agrees = false;
  nlohmann::ordered_json to_json() const;
};

/// Samples theta from the harmonic measure at o and classifies u at each
/// theta by nt_report for every c.
TheoremReport theorem_experiment(const Group& g, const StepDistribution& nu, const TabulatedFunction& u,
                                 const TheoremOptions& options);

struct Lemma61Options {
  HalfInt alpha = 1;
  std::vector<Word> points;  // empty: B(o, 3)
  std::size_t n_rays = 20;
  std::uint64_t n_traj = 4000;
  int exit_radius = 10;
  std::uint64_t seed = 1;
  int workers = default_workers();
};

struct Lemma61Report {
  double min_estimate = 0.0;
  double sigma_at_min = 0.0;
  Word argmin_x;
  std::size_t argmin_ray = 0;
  double oracle = 0.0;  // free group bound, 0 when not applicable
  std::size_t pairs = 0;
  bool pass = false;
  nlohmann::ordered_json to_json(const Group& g) const;
};

/// Tree value of the uniform lower bound, (1/4)(1/3)^(ceil(alpha) - 1)
/// for the simple walk on Free(2); alpha <= 0 gives 1.
double lemma61_free_oracle(HalfInt alpha);

/// Empirical min over x and sampled theta of mu_x{xi : (xi, theta)_x >= alpha}.
Lemma61Report lemma61_check(const Group& g, const StepDistribution& nu, const Lemma61Options& options);

/// mu_x of W_alpha(theta) from walks started at x.
PointEstimate shadow_mass_from(const Group& g, const StepDistribution& nu, const Word& x, const BoundaryRay& theta,
                               HalfInt alpha, std::uint64_t n_traj, int exit_radius, std::uint64_t seed,
                               std::uint64_t stream_offset = 0);

struct Lemma62Options {
  HalfInt c = 1;
  /// Candidate x are drawn from B(o, sample_radius) outside Gamma_c(E).
  int sample_radius = 4;
  std::size_t n_points = 50;
  std::uint64_t n_traj = 4000;
  int exit_radius = 12;
  std::uint64_t seed = 1;
  HalfInt delta_hat = 0;
  int workers = default_workers();
};

struct Lemma62Report {
  std::vector<PointEstimate> points;  // P_x(exit not in E)
  double eta_hat = 0.0;
  double sigma_at_min = 0.0;
  Word argmin;
  bool pass = false;  // eta_hat - 3 sigma > 0
  nlohmann::ordered_json to_json(const Group& g) const;
};

Lemma62Report lemma62_check(const Group& g, const StepDistribution& nu, const BoundarySet& e,
                            const Lemma62Options& options);

struct CorollaryOptions {
  HalfInt c = 2;
  std::size_t n_thetas = 5;
  std::uint64_t n_traj = 200;
  int exit_radius = 15;
  /// Tube widths whose spikes must end up inside Gamma_c(E).
  std::vector<HalfInt> spike_widths{HalfInt(1), HalfInt(2), HalfInt(3)};
  int spike_radius = 12;
  /// Widths compared with c in the N_c ~ N check.
  std::vector<HalfInt> c_list{HalfInt(1), HalfInt(2), HalfInt(3)};
  std::uint64_t seed = 1;
  HalfInt delta_hat = 0;
  ConditioningOptions conditioning;
};

struct CorollaryReport {
  /// Fraction of conditioned trajectories whose last third lies in Gamma_c(E).
  double tail_in_tube = 0.0;
  std::uint64_t tail_trajectories = 0;
  /// Per theta and spike width: least R beyond which the spike lies in
  /// Gamma_c(E), or -1.
  std::vector<std::vector<int>> spike_radius;
  bool spikes_contained = false;
  /// Thetas whose bounded verdict differs between widths, among uncensored.
  std::uint64_t width_disagreements = 0;
  std::uint64_t width_checked = 0;
  std::uint64_t width_censored = 0;
  std::vector<std::string> thetas;
  nlohmann::ordered_json to_json() const;
};

/// Sampled-theta checks of: conditioned walks toward theta in E end in
/// Gamma_c(E); Gamma_c(E) contains spikes of tubes at theta; bounded
/// verdicts do not depend on the tube width.
CorollaryReport corollary_checks(const Group& g, const StepDistribution& nu, const BoundarySet& e,
                                 const TabulatedFunction& u, const CorollaryOptions& options);

struct EtaTauOptions {
  HalfInt c = 2;
  std::vector<Word> points;  // z in Gamma_c(E)
  std::uint64_t n_traj = 4000;
  int exit_radius = 14;
  std::uint64_t seed = 1;
  double eta_hat = 0.0;
  double eta_sigma = 0.0;
  HalfInt delta_hat = 0;
};

struct EtaTauPoint {
  Word z;
  double p_not_e = 0.0, se_not_e = 0.0;
  double p_tau = 0.0, se_tau = 0.0;
  bool holds = false;
};

struct EtaTauReport {
  std::vector<EtaTauPoint> points;
  bool pass = false;
  /// P(tau < infinity) along the given points does not increase beyond noise.
  bool monotone = false;
  nlohmann::ordered_json to_json(const Group& g) const;
};

/// P_z(X_inf not in E) >= eta P_z(tau < infinity), tau the exit time of
/// Gamma_c(E), both estimated from the same walks.
EtaTauReport eta_tau_bound_check(const Group& g, const StepDistribution& nu, const BoundarySet& e,
                                 const EtaTauOptions& options);

struct StoppedBoundReport {
  std::uint64_t trajectories = 0;
  std::uint64_t violations = 0;
  std::uint64_t stopped = 0;  // trajectories with T_m finite
  bool pass = false;
  nlohmann::ordered_json to_json() const;
};

/// |u(X_{n ^ T_m})| <= max(m, |u(X_0)|) along every trajectory.
StoppedBoundReport stopped_bound_check(const Group& g, const StepDistribution& nu, const TabulatedFunction& u,
                                       const std::vector<Trajectory>& trajectories, double m);

}  // namespace fatou
