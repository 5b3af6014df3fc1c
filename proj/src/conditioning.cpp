#include "fatou/conditioning.hpp"

#include <algorithm>
#include <cmath>

#include "fatou/error.hpp"

namespace fatou {

ConditionedKernel ConditionedKernel::toward(const Group& g, const StepDistribution& nu, const BoundaryRay& theta,
                                            int radius, const ConditioningOptions& options) {
  if (g.is_lattice()) throw NonHyperbolicWarning("conditioning toward a boundary point needs a hyperbolic group");
  if (radius < 0) throw InvalidArgument("radius must be >= 0");
  ConditionedKernel k;
  k.theta_ = theta;
  k.depth_ = options.depth.value_or(radius + 10);
  if (k.depth_ < 1) throw InvalidArgument("conditioning depth must be >= 1");
  k.base_ = nu;
  k.target_ = theta.description(g);
  std::vector<int> depths;
  if (k.depth_ > 5) depths.push_back(k.depth_ - 5);
  depths.push_back(k.depth_);
  k.stabilization_ = martin_kernel_at_boundary(g, nu, theta.point(g, 1), theta, depths, options.stabilization_tol,
                                               options.margin);
  k.h_ = martin_function(g, nu, theta.point(g, k.depth_), k.depth_ + options.margin,
                         "K(., " + k.target_ + " @" + std::to_string(k.depth_) + ")", options.linear);
  return k;
}

ConditionedKernel ConditionedKernel::from_function(const StepDistribution& nu, TabulatedFunction h,
                                                   std::string target) {
  ConditionedKernel k;
  k.base_ = nu;
  k.h_ = std::move(h);
  k.target_ = std::move(target);
  return k;
}

nlohmann::ordered_json ConditionedKernel::to_json(const Group& g) const {
  nlohmann::ordered_json j;
  j["target"] = target_;
  if (theta_) j["theta"] = theta_->to_json(g);
  j["depth"] = depth_;
  j["h"] = h_.label();
  if (stabilization_) j["stabilization"] = stabilization_->to_json();
  return j;
}

HRow h_row(const Group& g, const ConditionedKernel& k, const Word& x) {
  const double hx = k.h()(x);
  if (!(hx > 0.0)) throw DegenerateRow("h(" + g.format(x) + ") = " + std::to_string(hx));
  HRow row;
  for (const auto& e : k.base().support()) {
    Word y = g.multiply(x, e.z);
    const double w = e.p * (k.h()(y) / hx);
    row.row_sum += w;
    row.weights.push_back(w);
    row.targets.push_back(std::move(y));
  }
  if (row.row_sum < 1e-12) throw DegenerateRow("row sum " + std::to_string(row.row_sum) + " at " + g.format(x));
  return row;
}

double h_transition(const Group& g, const Word& x, const Word& y, const ConditionedKernel& k) {
  const HRow row = h_row(g, k, x);
  double p = 0.0;
  for (std::size_t i = 0; i < row.targets.size(); ++i)
    if (row.targets[i] == y) p += row.probability(i);
  return p;
}

Word conditioned_step(const Group& g, const ConditionedKernel& k, const Word& x, RngStream& rng, double* defect) {
  HRow row = h_row(g, k, x);
  if (defect) *defect = std::max(*defect, row.defect());
  const double t = rng.uniform() * row.row_sum;
  double cumulative = 0.0;
  std::size_t i = 0;
  for (; i + 1 < row.weights.size(); ++i) {
    cumulative += row.weights[i];
    if (t < cumulative) break;
  }
  return std::move(row.targets[i]);
}

Trajectory simulate_conditioned(const Group& g, const Word& z, const ConditionedKernel& k, const StopRule& stop,
                                RngStream& rng) {
  if (!stop.steps && !stop.exit_radius) throw InvalidArgument("stop rule needs steps or an exit radius");
  Trajectory t;
  t.start = z;
  t.seed = rng.master();
  t.stream = rng.stream();
  t.conditioned = k.target();
  t.conditioned_depth = k.depth();
  const ExitTest exit(g, stop.exit_radius);
  walk_streaming(
      z, stop, exit, [&](const Word& x) { return conditioned_step(g, k, x, rng, &t.renorm_defect); },
      [&](const Word& x, std::int64_t) { t.positions.push_back(x); });
  return t;
}

nlohmann::ordered_json DesintegrationReport::to_json() const {
  nlohmann::ordered_json j;
  j["left"] = left;
  j["left_stderr"] = left_stderr;
  j["right"] = right;
  j["right_stderr"] = right_stderr;
  j["z_score"] = z_score;
  j["n_outer"] = n_outer;
  j["n_inner"] = n_inner;
  j["max_renorm_defect"] = max_renorm_defect;
  return j;
}

DesintegrationReport desintegration_check(const Group& g, const StepDistribution& nu, const Word& z,
                                          const TrajectoryFunctional& f, const DesintegrationOptions& options) {
  if (options.n_outer < 2 || options.n_inner < 1) throw InvalidArgument("need n_outer >= 2 and n_inner >= 1");
  if (options.horizon < 0) throw InvalidArgument("horizon must be >= 0");
  DesintegrationReport r;
  r.n_outer = options.n_outer;
  r.n_inner = options.n_inner;
  const StopRule horizon = StopRule::fixed(options.horizon);

  struct Moments {
    double sum = 0.0, sumsq = 0.0, defect = 0.0;
  };
  auto merge = [](Moments& into, Moments part) {
    into.sum += part.sum;
    into.sumsq += part.sumsq;
    into.defect = std::max(into.defect, part.defect);
  };

  // Left side: plain walks.
  const std::uint64_t n_left = options.n_outer * options.n_inner;
  Moments left = chunked_reduce(
      n_left, 1024, options.workers, Moments{},
      [&](std::size_t begin, std::size_t end) {
        Moments m;
        for (std::size_t i = begin; i < end; ++i) {
          RngStream rng(options.seed, i);
          const double v = f(simulate(g, nu, z, horizon, rng));
          m.sum += v;
          m.sumsq += v * v;
        }
        return m;
      },
      merge);
  const double nl = static_cast<double>(n_left);
  r.left = left.sum / nl;
  r.left_stderr = std::sqrt(std::max(0.0, (left.sumsq - nl * r.left * r.left) / (nl - 1.0)) / nl);

  // Right side: theta from frozen exit rays on separate streams, then
  // conditioned walks toward it.
  const RngStream theta_streams(options.seed, 1);
  const RngStream inner_streams(options.seed, 2);
  const int radius = options.horizon + nu.m1() + g.word_length(z);
  StopRule to_exit = StopRule::exit_ball(options.exit_radius);
  Moments right = chunked_reduce(
      options.n_outer, 16, options.workers, Moments{},
      [&](std::size_t begin, std::size_t end) {
        Moments m;
        for (std::size_t o = begin; o < end; ++o) {
          RngStream trng = theta_streams.child(o);
          const Trajectory plain = simulate(g, nu, z, to_exit, trng);
          const BoundaryRay theta = BoundaryRay::frozen(g, exit_proxy(g, plain, options.exit_radius));
          const ConditionedKernel k = ConditionedKernel::toward(g, nu, theta, radius, options.conditioning);
          double inner = 0.0;
          for (std::uint64_t j = 0; j < options.n_inner; ++j) {
            RngStream rng = inner_streams.child(o * options.n_inner + j);
            const Trajectory t = simulate_conditioned(g, z, k, horizon, rng);
            m.defect = std::max(m.defect, t.renorm_defect);
            inner += f(t);
          }
          inner /= static_cast<double>(options.n_inner);
          m.sum += inner;
          m.sumsq += inner * inner;
        }
        return m;
      },
      merge);
  const double no = static_cast<double>(options.n_outer);
  r.right = right.sum / no;
  r.right_stderr = std::sqrt(std::max(0.0, (right.sumsq - no * r.right * r.right) / (no - 1.0)) / no);
  r.max_renorm_defect = right.defect;
  const double se = std::hypot(r.left_stderr, r.right_stderr);
  r.z_score = se > 0.0 ? (r.left - r.right) / se : (r.left == r.right ? 0.0 : INFINITY);
  return r;
}

}  // namespace fatou
