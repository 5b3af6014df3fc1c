#include "fatou/potential.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <unordered_map>

#include "fatou/error.hpp"
#include "fatou/lumping.hpp"

namespace fatou {

namespace {

int length_of(const Group& g, const Word& x) {
  return g.geodesic_normal_form() ? static_cast<int>(x.size()) : g.word_length(x);
}

// x_i = rhs_i + self_i x_i + sum_j w_ij x_j, solved by Gauss-Seidel.
struct FixedPointSystem {
  std::vector<std::vector<std::pair<std::size_t, double>>> off;
  std::vector<double> self;
  std::vector<double> rhs;

  explicit FixedPointSystem(std::size_t n) : off(n), self(n, 0.0), rhs(n, 0.0) {}

  // Largest per-row residual relative to the row's value: Green functions
  // toward far points are tiny near o and still need full precision there.
  double residual(const std::vector<double>& v) const {
    double worst = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
      double s = rhs[i] + self[i] * v[i];
      for (auto [j, w] : off[i]) s += w * v[j];
      const double scale = std::max(std::abs(s), std::abs(v[i]));
      if (scale > 0.0) worst = std::max(worst, std::abs(s - v[i]) / scale);
    }
    return worst;
  }

  std::vector<double> solve(const LinearOptions& options, double& residual_out, std::int64_t& sweeps_out) const {
    const std::size_t n = rhs.size();
    std::vector<double> v(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      if (self[i] >= 1.0) throw SolverFailure("row " + std::to_string(i) + " has no escaping mass");
    std::int64_t sweeps = 0;
    double r = residual(v);
    while (r > options.tolerance) {
      for (int k = 0; k < 16; ++k) {
        for (std::size_t i = 0; i < n; ++i) {
          double s = rhs[i];
          for (auto [j, w] : off[i]) s += w * v[j];
          v[i] = s / (1.0 - self[i]);
        }
      }
      sweeps += 16;
      r = residual(v);
      if (!std::isfinite(r)) throw SolverFailure("iteration diverged");
      if (sweeps >= options.max_sweeps)
        throw SolverFailure("residual " + std::to_string(r) + " after " + std::to_string(sweeps) + " sweeps");
    }
    residual_out = r;
    sweeps_out = sweeps;
    return v;
  }
};

bool use_lumping(const Group& g, const StepDistribution& nu, SolverRoute route) {
  const bool possible = g.is_tree() && nu.nearest_neighbour_uniform(g).has_value();
  if (route == SolverRoute::Lumped && !possible)
    throw InvalidArgument("lumped route needs a tree backend and a nearest-neighbour uniform law");
  if (route == SolverRoute::Auto) return possible;
  return route == SolverRoute::Lumped;
}

// Fills rows for unknown classes; boundary_value(cls) gives fixed values of
// non-unknown classes (killed classes contribute nothing).
template <class IsUnknown, class BoundaryValue>
FixedPointSystem lumped_system(const TreeLumping& lump, double hold, double q, IsUnknown&& unknown,
                               BoundaryValue&& boundary_value, std::vector<std::size_t>& slot) {
  const std::size_t classes = lump.class_count();
  slot.assign(classes, SIZE_MAX);
  std::size_t n = 0;
  for (std::size_t c = 0; c < classes; ++c)
    if (unknown(c)) slot[c] = n++;
  FixedPointSystem sys(n);
  for (std::size_t c = 0; c < classes; ++c) {
    if (slot[c] == SIZE_MAX) continue;
    const std::size_t i = slot[c];
    for (const auto& m : lump.moves(c, hold, q)) {
      if (m.target < 0) continue;
      const auto t = static_cast<std::size_t>(m.target);
      if (t == c)
        sys.self[i] += m.weight;
      else if (slot[t] != SIZE_MAX)
        sys.off[i].emplace_back(slot[t], m.weight);
      else
        sys.rhs[i] += m.weight * boundary_value(t);
    }
  }
  return sys;
}

TabulatedFunction lumped_function(std::shared_ptr<const TreeLumping> lump, std::vector<double> values,
                                  int radius, std::string label) {
  auto shared = std::make_shared<const std::vector<double>>(std::move(values));
  return TabulatedFunction(
      [lump, shared](const Word& x) -> std::optional<double> {
        const int c = lump->class_of(x);
        if (c < 0) return std::nullopt;
        return (*shared)[static_cast<std::size_t>(c)];
      },
      radius, std::move(label));
}

}  // namespace

double laplacian(const Group& g, const StepDistribution& nu, const TabulatedFunction& f, const Word& x) {
  double s = 0.0;
  for (const auto& e : nu.support()) s += e.p * f(g.multiply(x, e.z));
  return s - f(x);
}

HarmonicityReport is_harmonic(const Group& g, const StepDistribution& nu, const TabulatedFunction& f,
                              const std::vector<Word>& region, double tol) {
  HarmonicityReport r;
  r.tol = tol;
  for (const auto& x : region) {
    const double d = std::abs(laplacian(g, nu, f, x));
    ++r.checked;
    if (d > r.max_residual || r.checked == 1) {
      r.max_residual = d;
      r.worst = x;
    }
  }
  r.pass = r.max_residual <= tol;
  return r;
}

nlohmann::ordered_json GreenEstimate::to_json(const Group& g) const {
  nlohmann::ordered_json j;
  j["x"] = g.format(x);
  j["y"] = g.format(y);
  j["value"] = value;
  if (method == "monte-carlo") {
    j["stderr"] = stderr_;
    j["n_traj"] = n_traj;
  }
  j["truncation_radius"] = truncation_radius;
  j["method"] = method;
  return j;
}

std::vector<GreenEstimate> green_mc_targets(const Group& g, const StepDistribution& nu, const Word& x,
                                            const std::vector<Word>& targets, int radius,
                                            const McOptions& options) {
  if (options.n_traj < 2) throw InvalidArgument("green_mc needs at least two trajectories");
  std::unordered_map<Word, std::size_t, WordHash> index;
  std::size_t max_len = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    if (length_of(g, targets[i]) > radius)
      throw PreconditionViolated("target " + g.format(targets[i]) + " lies outside the exit radius " +
                                 std::to_string(radius));
    index.emplace(targets[i], i);
    max_len = std::max(max_len, targets[i].size());
  }
  const bool geodesic_nf = g.geodesic_normal_form();
  StopRule stop = StopRule::exit_ball(radius + 1);
  stop.hard_cap = options.step_cap;
  const ExitTest exit(g, stop.exit_radius);
  const std::size_t n_targets = targets.size();

  struct Sums {
    std::vector<std::uint64_t> sum, sumsq;
  };
  auto merge = [](Sums& into, Sums part) {
    for (std::size_t k = 0; k < into.sum.size(); ++k) {
      into.sum[k] += part.sum[k];
      into.sumsq[k] += part.sumsq[k];
    }
  };
  Sums total{std::vector<std::uint64_t>(n_targets, 0), std::vector<std::uint64_t>(n_targets, 0)};
  total = chunked_reduce(
      options.n_traj, 1024, options.workers, std::move(total),
      [&](std::size_t begin, std::size_t end) {
        Sums s{std::vector<std::uint64_t>(n_targets, 0), std::vector<std::uint64_t>(n_targets, 0)};
        std::vector<std::uint64_t> counts(n_targets, 0);
        std::vector<std::size_t> touched;
        for (std::size_t i = begin; i < end; ++i) {
          RngStream rng(options.seed, options.stream_offset + i);
          walk_streaming(
              x, stop, exit, [&](const Word& w) { return step(g, nu, w, rng); },
              [&](const Word& w, std::int64_t) {
                if (geodesic_nf && w.size() > max_len) return;
                auto it = index.find(w);
                if (it == index.end()) return;
                if (counts[it->second]++ == 0) touched.push_back(it->second);
              });
          for (auto k : touched) {
            s.sum[k] += counts[k];
            s.sumsq[k] += counts[k] * counts[k];
            counts[k] = 0;
          }
          touched.clear();
        }
        return s;
      },
      merge);

  std::vector<GreenEstimate> out;
  const double n = static_cast<double>(options.n_traj);
  for (std::size_t k = 0; k < n_targets; ++k) {
    GreenEstimate est;
    est.x = x;
    est.y = targets[k];
    est.method = "monte-carlo";
    est.truncation_radius = radius;
    est.n_traj = options.n_traj;
    const double mean = static_cast<double>(total.sum[k]) / n;
    const double var = std::max(0.0, (static_cast<double>(total.sumsq[k]) - n * mean * mean) / (n - 1.0));
    est.value = mean;
    est.stderr_ = std::sqrt(var / n);
    out.push_back(std::move(est));
  }
  return out;
}

GreenEstimate green_mc(const Group& g, const StepDistribution& nu, const Word& x, const Word& y, int radius,
                       const McOptions& options) {
  return green_mc_targets(g, nu, x, {y}, radius, options).front();
}

std::string to_string(SolverRoute r) {
  switch (r) {
    case SolverRoute::Auto: return "auto";
    case SolverRoute::Explicit: return "explicit";
    case SolverRoute::Lumped: return "lumped";
  }
  return "?";
}

SolverRoute parse_solver_route(const std::string& text) {
  if (text == "auto") return SolverRoute::Auto;
  if (text == "explicit") return SolverRoute::Explicit;
  if (text == "lumped") return SolverRoute::Lumped;
  throw InvalidArgument("unknown solver route '" + text + "'");
}

nlohmann::ordered_json LinearSolution::to_json() const {
  nlohmann::ordered_json j;
  j["route"] = to_string(route);
  j["radius"] = radius;
  j["unknowns"] = unknowns;
  j["sweeps"] = sweeps;
  j["residual"] = residual;
  j["label"] = f.label();
  return j;
}

LinearSolution green_linear(const Group& g, const StepDistribution& nu, const Word& y, int radius,
                            const LinearOptions& options) {
  if (radius < 0) throw InvalidArgument("radius must be >= 0");
  if (length_of(g, y) > radius)
    throw PreconditionViolated("target " + g.format(y) + " lies outside B(o, " + std::to_string(radius) + ")");
  std::string label = "green_" + std::to_string(radius) + "(., " + g.format(y) + ")";
  if (g.is_lattice()) label += " [lattice backend: recurrent or non-hyperbolic]";
  LinearSolution sol;
  sol.radius = radius;
  std::vector<double> values;
  if (use_lumping(g, nu, options.route)) {
    auto [hold, q] = *nu.nearest_neighbour_uniform(g);
    auto lump = std::make_shared<const TreeLumping>(g, std::vector<Word>{y}, radius);
    std::vector<std::size_t> slot;
    auto sys = lumped_system(
        *lump, hold, q, [](std::size_t) { return true; }, [](std::size_t) { return 0.0; }, slot);
    sys.rhs[slot[static_cast<std::size_t>(lump->class_of(y))]] += 1.0;
    values = sys.solve(options, sol.residual, sol.sweeps);
    sol.unknowns = values.size();
    sol.route = SolverRoute::Lumped;
    sol.f = lumped_function(lump, std::move(values), radius, label);
    return sol;
  }
  Ball b = ball(g, radius, Word{}, options.ball_budget);
  FixedPointSystem sys(b.size());
  for (std::size_t i = 0; i < b.size(); ++i)
    for (const auto& e : nu.support()) {
      Word w = g.multiply(b[i], e.z);
      if (w == b[i]) {
        sys.self[i] += e.p;
      } else if (auto j = b.index_of(w)) {
        sys.off[i].emplace_back(*j, e.p);
      }
    }
  sys.rhs[*b.index_of(y)] = 1.0;
  values = sys.solve(options, sol.residual, sol.sweeps);
  sol.unknowns = values.size();
  sol.route = SolverRoute::Explicit;
  sol.f = TabulatedFunction::from_ball(b, values, label);
  return sol;
}

MartinEstimate martin_kernel(const Group& g, const StepDistribution& nu, const Word& x, const Word& y,
                             GreenMethod method, int margin, const McOptions& mc) {
  const int radius = std::max(length_of(g, x), length_of(g, y)) + margin;
  MartinEstimate est;
  if (method == GreenMethod::Linear) {
    auto sol = green_linear(g, nu, y, radius);
    est.value = sol.f(x) / sol.f(Word{});
    est.method = "linear";
    return est;
  }
  McOptions from_o = mc;
  from_o.stream_offset = mc.stream_offset + mc.n_traj;
  auto gx = green_mc(g, nu, x, y, radius, mc);
  auto go = green_mc(g, nu, Word{}, y, radius, from_o);
  if (go.value < 10.0 * go.stderr_ || go.value <= 0.0)
    throw DivisionUnstable("G(o, y) = " + std::to_string(go.value) + " with stderr " + std::to_string(go.stderr_));
  est.value = gx.value / go.value;
  const double rx = gx.value > 0 ? gx.stderr_ / gx.value : 0.0;
  const double ro = go.stderr_ / go.value;
  est.stderr_ = std::abs(est.value) * std::sqrt(rx * rx + ro * ro);
  est.method = "monte-carlo";
  return est;
}

TabulatedFunction martin_function(const Group& g, const StepDistribution& nu, const Word& y, int radius,
                                  const std::string& label, const LinearOptions& options) {
  auto sol = green_linear(g, nu, y, radius, options);
  const double go = sol.f(Word{});
  if (!(go > 0.0)) throw DivisionUnstable("G(o, y) vanishes");
  TabulatedFunction green = sol.f;
  return TabulatedFunction(
      [green, go](const Word& x) -> std::optional<double> {
        auto v = green.at(x);
        if (!v) return std::nullopt;
        return *v / go;
      },
      radius, label);
}

nlohmann::ordered_json StabilizationReport::to_json() const {
  nlohmann::ordered_json j;
  j["depths"] = depths;
  j["values"] = values;
  j["value"] = value;
  j["max_deviation"] = max_deviation;
  j["final_deviation"] = final_deviation;
  j["tol"] = tol;
  j["stabilized"] = stabilized;
  return j;
}

StabilizationReport martin_kernel_at_boundary(const Group& g, const StepDistribution& nu, const Word& x,
                                              const BoundaryRay& theta, const std::vector<int>& depths,
                                              double tol, int margin) {
  if (depths.empty()) throw InvalidArgument("no depths given");
  if (!std::is_sorted(depths.begin(), depths.end()) ||
      std::adjacent_find(depths.begin(), depths.end()) != depths.end())
    throw InvalidArgument("depths must be increasing");
  StabilizationReport r;
  r.depths = depths;
  r.tol = tol;
  for (int n : depths) {
    const Word y = theta.point(g, n);
    r.values.push_back(martin_kernel(g, nu, x, y, GreenMethod::Linear, margin).value);
  }
  for (std::size_t k = 1; k < r.values.size(); ++k) {
    const double scale = std::max(std::abs(r.values[k]), 1e-300);
    const double dev = std::abs(r.values[k] - r.values[k - 1]) / scale;
    r.max_deviation = std::max(r.max_deviation, dev);
    if (k + 1 == r.values.size()) r.final_deviation = dev;
  }
  r.value = r.values.back();
  r.stabilized = r.final_deviation <= tol;
  if (!r.stabilized)
    throw NotStabilized("K(" + g.format(x) + ", " + theta.description(g) + ") moved by " +
                        std::to_string(r.final_deviation) + " between the last two depths");
  return r;
}

Binning Binning::sphere(int t) {
  if (t < 0) throw InvalidArgument("sphere cell radius must be >= 0");
  Binning b;
  b.kind = Kind::SphereCell;
  b.t = t;
  return b;
}

Binning Binning::of_shadows(std::vector<Shadow> shadows) {
  Binning b;
  b.kind = Kind::Shadows;
  b.shadows = std::move(shadows);
  return b;
}

nlohmann::ordered_json HarmonicMeasureEstimate::to_json(const Group&) const {
  nlohmann::ordered_json j;
  j["n_traj"] = n_traj;
  j["radius"] = radius;
  auto& arr = j["bins"] = nlohmann::ordered_json::array();
  for (const auto& b : bins) {
    nlohmann::ordered_json e;
    e["bin"] = b.label;
    e["count"] = b.count;
    e["probability"] = b.probability;
    e["sigma"] = b.sigma;
    arr.push_back(e);
  }
  return j;
}

Word sphere_cell(const Group& g, const Word& exit_point, int t) {
  if (g.is_tree()) return exit_point.prefix(static_cast<std::size_t>(t));
  auto seg = geodesic(g, Word{}, exit_point);
  if (static_cast<std::size_t>(t) >= seg.vertices.size()) return seg.vertices.back();
  return seg.vertices[static_cast<std::size_t>(t)];
}

namespace {

// Exit point of one trajectory at radius R.
Word run_to_exit(const Group& g, const StepDistribution& nu, const Word& z, const StopRule& stop,
                 const ExitTest& exit, RngStream& rng) {
  Word last = z;
  walk_streaming(
      z, stop, exit, [&](const Word& w) { return step(g, nu, w, rng); },
      [&](const Word& w, std::int64_t) { last = w; });
  return last;
}

}  // namespace

HarmonicMeasureEstimate harmonic_measure(const Group& g, const StepDistribution& nu, const Word& z, int radius,
                                         const Binning& binning, const McOptions& options, HalfInt delta_hat) {
  if (binning.kind == Binning::Kind::SphereCell && binning.t > radius)
    throw InvalidArgument("sphere cell radius exceeds the exit radius");
  StopRule stop = StopRule::exit_ball(radius);
  stop.hard_cap = options.step_cap;
  const ExitTest exit(g, radius);
  using Counts = std::map<Word, std::uint64_t>;
  std::vector<std::string> shadow_labels;
  for (const auto& s : binning.shadows) shadow_labels.push_back(s.label(g));

  Counts counts = chunked_reduce(
      options.n_traj, 1024, options.workers, Counts{},
      [&](std::size_t begin, std::size_t end) {
        Counts local;
        for (std::size_t i = begin; i < end; ++i) {
          RngStream rng(options.seed, options.stream_offset + i);
          const Word proxy = run_to_exit(g, nu, z, stop, exit, rng);
          if (binning.kind == Binning::Kind::SphereCell) {
            ++local[sphere_cell(g, proxy, binning.t)];
          } else {
            // Shadow bins are keyed by index, encoded as a one-letter word.
            std::size_t k = 0;
            const int depth = static_cast<int>(proxy.size()) + 8;
            for (; k < binning.shadows.size(); ++k)
              if (shadow_contains(g, binning.shadows[k], proxy, Word{}, delta_hat, depth).contains) break;
            ++local[Word({static_cast<Letter>(k)})];
          }
        }
        return local;
      },
      [](Counts& into, Counts part) {
        for (auto& [w, c] : part) into[w] += c;
      });

  HarmonicMeasureEstimate est;
  est.z = z;
  est.radius = radius;
  est.n_traj = options.n_traj;
  const double n = static_cast<double>(options.n_traj);
  auto add_bin = [&](std::string label, Word cell, std::uint64_t c) {
    MeasureBin b;
    b.label = std::move(label);
    b.cell = std::move(cell);
    b.count = c;
    b.probability = static_cast<double>(c) / n;
    b.sigma = std::sqrt(b.probability * (1.0 - b.probability) / n);
    est.bins.push_back(std::move(b));
  };
  if (binning.kind == Binning::Kind::SphereCell) {
    for (auto& [w, c] : counts) add_bin(g.format(w), w, c);
  } else {
    for (std::size_t k = 0; k <= binning.shadows.size(); ++k) {
      auto it = counts.find(Word({static_cast<Letter>(k)}));
      add_bin(k < shadow_labels.size() ? shadow_labels[k] : "none", Word{}, it == counts.end() ? 0 : it->second);
    }
  }
  return est;
}

PoissonResult poisson_integral(const Group& g, const StepDistribution& nu, const BoundarySet& e, int radius,
                               PoissonMethod method, const std::vector<Word>& points, const McOptions& mc,
                               const LinearOptions& linear, HalfInt delta_hat) {
  if (radius < 1) throw InvalidArgument("Dirichlet radius must be >= 1");
  PoissonResult result;
  result.method = method;
  result.radius = radius;
  const std::string label = "poisson(" + e.label(g) + ", R=" + std::to_string(radius) + ")";

  if (method == PoissonMethod::MonteCarlo) {
    StopRule stop = StopRule::exit_ball(radius);
    stop.hard_cap = mc.step_cap;
    const ExitTest exit(g, radius);
    std::unordered_map<Word, double, WordHash> table;
    for (std::size_t p = 0; p < points.size(); ++p) {
      const Word& x = points[p];
      const std::uint64_t hits = chunked_reduce(
          mc.n_traj, 1024, mc.workers, std::uint64_t{0},
          [&](std::size_t begin, std::size_t end) {
            std::uint64_t h = 0;
            for (std::size_t i = begin; i < end; ++i) {
              RngStream rng(mc.seed, mc.stream_offset + p * mc.n_traj + i);
              if (e.contains(g, run_to_exit(g, nu, x, stop, exit, rng), delta_hat)) ++h;
            }
            return h;
          },
          [](std::uint64_t& into, std::uint64_t part) { into += part; });
      PointEstimate est;
      est.x = x;
      est.count = mc.n_traj;
      est.value = static_cast<double>(hits) / static_cast<double>(mc.n_traj);
      est.stderr_ = std::sqrt(est.value * (1.0 - est.value) / static_cast<double>(mc.n_traj));
      table[x] = est.value;
      result.points.push_back(std::move(est));
    }
    result.f = TabulatedFunction::from_table(std::move(table), std::nullopt, label + " [monte-carlo]");
    return result;
  }

  if (use_lumping(g, nu, linear.route)) {
    auto [hold, q] = *nu.nearest_neighbour_uniform(g);
    std::vector<Word> marks;
    for (const auto& s : e.shadows()) marks.push_back(s.word ? *s.word : s.ray->point(g, static_cast<int>(s.r.ceil())));
    auto lump = std::make_shared<const TreeLumping>(g, marks, radius);
    std::vector<double> data(lump->class_count(), 0.0);
    for (std::size_t c = 0; c < data.size(); ++c)
      if (lump->depth(c) >= radius) data[c] = e.contains(g, lump->representative(c), delta_hat) ? 1.0 : 0.0;
    std::vector<std::size_t> slot;
    auto sys = lumped_system(
        *lump, hold, q, [&](std::size_t c) { return lump->depth(c) < radius; },
        [&](std::size_t c) { return data[c]; }, slot);
    auto values = sys.solve(linear, result.solve.residual, result.solve.sweeps);
    for (std::size_t c = 0; c < data.size(); ++c)
      if (slot[c] != SIZE_MAX) data[c] = values[slot[c]];
    result.solve.unknowns = values.size();
    result.solve.route = SolverRoute::Lumped;
    result.solve.radius = radius;
    result.solve.f = lumped_function(lump, std::move(data), radius, label);
    result.f = result.solve.f;
    return result;
  }

  Ball b = ball(g, radius - 1 + nu.m1(), Word{}, linear.ball_budget);
  std::vector<std::size_t> slot(b.size(), SIZE_MAX);
  std::size_t n = 0;
  for (std::size_t i = 0; i < b.size(); ++i)
    if (b.distance(i) < radius) slot[i] = n++;
  std::vector<double> data(b.size(), 0.0);
  for (std::size_t i = 0; i < b.size(); ++i)
    if (slot[i] == SIZE_MAX) data[i] = e.contains(g, b[i], delta_hat) ? 1.0 : 0.0;
  FixedPointSystem sys(n);
  for (std::size_t i = 0; i < b.size(); ++i) {
    if (slot[i] == SIZE_MAX) continue;
    for (const auto& s : nu.support()) {
      Word w = g.multiply(b[i], s.z);
      auto j = b.index_of(w);
      if (!j) throw SolverFailure("step leaves the tabulated ball");
      if (*j == i)
        sys.self[slot[i]] += s.p;
      else if (slot[*j] != SIZE_MAX)
        sys.off[slot[i]].emplace_back(slot[*j], s.p);
      else
        sys.rhs[slot[i]] += s.p * data[*j];
    }
  }
  auto values = sys.solve(linear, result.solve.residual, result.solve.sweeps);
  for (std::size_t i = 0; i < b.size(); ++i)
    if (slot[i] != SIZE_MAX) data[i] = values[slot[i]];
  // keep the domain to B(o, R): beyond it the data is not the exit law
  std::unordered_map<Word, double, WordHash> table;
  for (std::size_t i = 0; i < b.size(); ++i)
    if (b.distance(i) <= radius) table.emplace(b[i], data[i]);
  result.solve.unknowns = n;
  result.solve.route = SolverRoute::Explicit;
  result.solve.radius = radius;
  result.solve.f = TabulatedFunction::from_table(std::move(table), radius, label);
  result.f = result.solve.f;
  return result;
}

MartingaleReport martingale_check(const Group& g, const StepDistribution& nu, const TabulatedFunction& f,
                                  const std::vector<Trajectory>& trajectories, double z_limit) {
  MartingaleReport r;
  r.trajectories = trajectories.size();
  std::size_t horizon = 0;
  for (const auto& t : trajectories) horizon = std::max(horizon, t.positions.size());
  std::vector<double> sum(horizon, 0.0), sumsq(horizon, 0.0);
  std::unordered_map<Word, double, WordHash> lap_cache;
  for (const auto& t : trajectories) {
    double m = 0.0;
    double drift = 0.0;
    const double m0 = f(t.positions.front());
    for (std::size_t n = 0; n < horizon; ++n) {
      if (n < t.positions.size()) {
        const Word& x = t.positions[n];
        m = f(x) - drift;
        auto it = lap_cache.find(x);
        if (it == lap_cache.end()) {
          const double lap = laplacian(g, nu, f, x);
          double direct = 0.0;
          for (const auto& e : nu.support()) direct += e.p * f(g.multiply(x, e.z));
          r.max_identity_error = std::max(r.max_identity_error, std::abs(direct - (f(x) + lap)));
          it = lap_cache.emplace(x, lap).first;
        }
        drift += it->second;
      }
      const double inc = m - m0;
      sum[n] += inc;
      sumsq[n] += inc * inc;
    }
  }
  const double k = static_cast<double>(trajectories.size());
  for (std::size_t n = 0; n < horizon; ++n) {
    const double mean = sum[n] / k;
    const double var = k > 1 ? std::max(0.0, (sumsq[n] - k * mean * mean) / (k - 1.0)) : 0.0;
    const double se = std::sqrt(var / k);
    r.mean_increment.push_back(mean);
    r.stderr_increment.push_back(se);
    if (se > 0.0)
      r.max_abs_z = std::max(r.max_abs_z, std::abs(mean) / se);
    else if (std::abs(mean) > 1e-12)
      r.max_abs_z = std::max(r.max_abs_z, 1e300);
  }
  r.pass = r.max_abs_z <= z_limit && r.max_identity_error <= 1e-12;
  return r;
}

}  // namespace fatou
