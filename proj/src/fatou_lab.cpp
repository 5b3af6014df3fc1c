#include "fatou/fatou_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "fatou/error.hpp"

namespace fatou {

namespace {

int length_of(const Group& g, const Word& x) {
  return g.geodesic_normal_form() ? static_cast<int>(x.size()) : g.word_length(x);
}

nlohmann::ordered_json half_list(const std::vector<HalfInt>& v) {
  auto j = nlohmann::ordered_json::array();
  for (auto h : v) j.push_back(h.to_double());
  return j;
}

// Degree of the Cayley tree when nu is the simple walk on it, else 0.
int simple_tree_degree(const Group& g, const StepDistribution& nu) {
  if (!g.is_tree()) return 0;
  auto nn = nu.nearest_neighbour_uniform(g);
  if (!nn || nn->first != 0.0) return 0;
  return static_cast<int>(g.generating_set().size());
}

Word run_to_exit(const Group& g, const StepDistribution& nu, const Word& z, int radius, RngStream& rng) {
  const StopRule stop = StopRule::exit_ball(radius);
  const ExitTest exit(g, radius);
  Word last = z;
  walk_streaming(
      z, stop, exit, [&](const Word& w) { return step(g, nu, w, rng); },
      [&](const Word& w, std::int64_t) { last = w; });
  return last;
}

}  // namespace

std::vector<Annulus> make_annuli(int first, int last, int width) {
  if (width < 1 || first > last) throw InvalidArgument("annuli need width >= 1 and first <= last");
  std::vector<Annulus> out;
  for (int r = first; r <= last; r += width) out.push_back({r, std::min(last, r + width - 1)});
  return out;
}

nlohmann::ordered_json NtReport::to_json(const Group& g) const {
  nlohmann::ordered_json j;
  j["theta"] = theta.description(g);
  j["c"] = c.to_double();
  auto& a = j["annuli"] = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < radii.size(); ++k) {
    nlohmann::ordered_json e;
    e["r1"] = radii[k].r1;
    e["r2"] = radii[k].r2;
    e["points"] = points_per_annulus[k];
    e["uncertain"] = uncertain_per_annulus[k];
    e["sup"] = sup_per_annulus[k];
    e["osc"] = osc_per_annulus[k];
    a.push_back(e);
  }
  j["censored"] = censored;
  j["bounded"] = verdicts.bounded;
  j["saturating"] = verdicts.saturating;
  j["convergent"] = verdicts.convergent;
  j["limit"] = verdicts.limit ? nlohmann::ordered_json(*verdicts.limit) : nlohmann::ordered_json(nullptr);
  return j;
}

NtReport nt_report(const Group& g, const TabulatedFunction& u, const TubeSpec& tube,
                   const std::vector<Annulus>& annuli, const NtOptions& options) {
  if (annuli.empty()) throw InvalidArgument("no annuli given");
  if (options.window < 1) throw InvalidArgument("window must be >= 1");
  NtReport r;
  r.theta = tube.theta;
  r.c = tube.c;
  r.radii = annuli;
  const std::size_t n = annuli.size();
  const double inf = std::numeric_limits<double>::infinity();
  r.sup_per_annulus.assign(n, 0.0);
  r.osc_per_annulus.assign(n, 0.0);
  r.min_per_annulus.assign(n, inf);
  r.max_per_annulus.assign(n, -inf);
  r.points_per_annulus.assign(n, 0);
  r.uncertain_per_annulus.assign(n, 0);
  int outer = 0;
  for (const auto& a : annuli) outer = std::max(outer, a.r2);
  const TubePoints tp = tube_points(g, tube, outer, options.delta_hat);
  for (const auto& x : tp.in) {
    const int len = length_of(g, x);
    std::optional<double> value;
    for (std::size_t k = 0; k < n; ++k) {
      if (len < annuli[k].r1 || len > annuli[k].r2) continue;
      if (!value) value = u(x);
      ++r.points_per_annulus[k];
      r.sup_per_annulus[k] = std::max(r.sup_per_annulus[k], std::abs(*value));
      r.min_per_annulus[k] = std::min(r.min_per_annulus[k], *value);
      r.max_per_annulus[k] = std::max(r.max_per_annulus[k], *value);
    }
  }
  for (const auto& x : tp.uncertain) {
    const int len = length_of(g, x);
    for (std::size_t k = 0; k < n; ++k)
      if (len >= annuli[k].r1 && len <= annuli[k].r2) ++r.uncertain_per_annulus[k];
  }
  for (std::size_t k = 0; k < n; ++k) {
    if (r.points_per_annulus[k] == 0) {
      r.empty_annuli.push_back(k);
      r.min_per_annulus[k] = r.max_per_annulus[k] = 0.0;
    } else {
      r.osc_per_annulus[k] = r.max_per_annulus[k] - r.min_per_annulus[k];
    }
  }
  const auto w = static_cast<std::size_t>(options.window);
  r.censored = !r.empty_annuli.empty() || n <= w;
  if (r.censored) return r;

  std::vector<double> running(n);
  for (std::size_t k = 0; k < n; ++k) running[k] = std::max(k ? running[k - 1] : 0.0, r.sup_per_annulus[k]);
  const double sup = running[n - 1];
  const double growth = sup - running[n - 1 - w];
  r.verdicts.bounded = std::isfinite(sup) && growth <= options.growth_tol * sup + 1e-12;
  r.verdicts.saturating = r.sup_per_annulus[n - 1] >= 0.99 * sup;
  double lo = inf, hi = -inf;
  for (std::size_t k = n - w; k < n; ++k) {
    lo = std::min(lo, r.min_per_annulus[k]);
    hi = std::max(hi, r.max_per_annulus[k]);
  }
  const double limit = 0.5 * (r.min_per_annulus[n - 1] + r.max_per_annulus[n - 1]);
  r.verdicts.limit = limit;
  r.verdicts.convergent = r.verdicts.bounded && hi - lo <= options.conv_tol * (1.0 + std::abs(limit));
  return r;
}

nlohmann::ordered_json StochasticReport::to_json() const {
  nlohmann::ordered_json j;
  j["target"] = target;
  j["n_traj"] = n_traj;
  j["censored"] = censored;
  j["fraction_bounded"] = fraction_bounded;
  j["fraction_convergent"] = fraction_convergent;
  double worst = 0.0;
  for (double s : sup_thickened) worst = std::max(worst, s);
  j["max_sup_thickened"] = worst;
  return j;
}

StochasticReport stochastic_report(const Group& g, const TabulatedFunction& u, const ConditionedKernel& k,
                                   const Word& z, const StochasticOptions& options) {
  if (options.window < 1) throw InvalidArgument("window must be >= 1");
  StochasticReport r;
  r.target = k.target();
  r.n_traj = options.n_traj;
  const int m1 = k.base().m1();
  const StopRule stop = StopRule::exit_ball(options.exit_radius);

  struct Part {
    std::vector<double> thick, path, osc, limit;
    std::uint64_t censored = 0;
  };
  Part all = chunked_reduce(
      options.n_traj, 64, options.workers, Part{},
      [&](std::size_t begin, std::size_t end) {
        Part p;
        std::unordered_map<Word, double, WordHash> thick_cache;
        for (std::size_t i = begin; i < end; ++i) {
          RngStream rng(options.seed, options.stream_offset + i);
          try {
            const Trajectory t = simulate_conditioned(g, z, k, stop, rng);
            double thick = 0.0, path = 0.0;
            std::vector<double> values;
            values.reserve(t.positions.size());
            for (const auto& x : t.positions) {
              const double v = u(x);
              values.push_back(v);
              path = std::max(path, std::abs(v));
              auto it = thick_cache.find(x);
              if (it == thick_cache.end()) {
                double s = 0.0;
                const Ball around = ball(g, m1, x);
                for (const auto& y : around.elements()) s = std::max(s, std::abs(u(y)));
                it = thick_cache.emplace(x, s).first;
              }
              thick = std::max(thick, it->second);
            }
            const std::size_t from = values.size() > static_cast<std::size_t>(options.window)
                                         ? values.size() - static_cast<std::size_t>(options.window)
                                         : 0;
            const auto [lo, hi] = std::minmax_element(values.begin() + static_cast<std::ptrdiff_t>(from), values.end());
            p.thick.push_back(thick);
            p.path.push_back(path);
            p.osc.push_back(*hi - *lo);
            p.limit.push_back(values.back());
          } catch (const OutOfTabulatedRange&) {
            ++p.censored;
          }
        }
        return p;
      },
      [](Part& into, Part part) {
        auto append = [](std::vector<double>& a, const std::vector<double>& b) { a.insert(a.end(), b.begin(), b.end()); };
        append(into.thick, part.thick);
        append(into.path, part.path);
        append(into.osc, part.osc);
        append(into.limit, part.limit);
        into.censored += part.censored;
      });
  r.sup_thickened = std::move(all.thick);
  r.sup_path = std::move(all.path);
  r.tail_osc = std::move(all.osc);
  r.tail_limit = std::move(all.limit);
  r.censored = all.censored;
  const std::size_t kept = r.sup_thickened.size();
  if (kept > 0) {
    std::size_t bounded = 0, convergent = 0;
    for (std::size_t i = 0; i < kept; ++i) {
      bounded += r.sup_thickened[i] <= options.bound;
      convergent += r.tail_osc[i] <= options.conv_tol * (1.0 + std::abs(r.tail_limit[i]));
    }
    r.fraction_bounded = static_cast<double>(bounded) / static_cast<double>(kept);
    r.fraction_convergent = static_cast<double>(convergent) / static_cast<double>(kept);
  }
  return r;
}

std::vector<BoundaryRay> sample_boundary_rays(const Group& g, const StepDistribution& nu, std::size_t n,
                                              int exit_radius, std::uint64_t seed, const Word& z) {
  std::vector<BoundaryRay> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    RngStream rng(seed, i);
    out.push_back(BoundaryRay::frozen(g, run_to_exit(g, nu, z, exit_radius, rng)));
  }
  return out;
}

void Contingency::add(const NtVerdicts& v) {
  if (v.bounded)
    ++(v.convergent ? bounded_convergent : bounded_not_convergent);
  else
    ++(v.convergent ? not_bounded_convergent : not_bounded_not_convergent);
}

nlohmann::ordered_json Contingency::to_json() const {
  nlohmann::ordered_json j;
  j["bounded_convergent"] = bounded_convergent;
  j["bounded_not_convergent"] = bounded_not_convergent;
  j["not_bounded_convergent"] = not_bounded_convergent;
  j["not_bounded_not_convergent"] = not_bounded_not_convergent;
  j["censored"] = censored;
  return j;
}

nlohmann::ordered_json TheoremReport::to_json() const {
  nlohmann::ordered_json j;
  j["function"] = function_label;
  j["c"] = half_list(c_list);
  auto& per = j["per_c"] = nlohmann::ordered_json::array();
  for (const auto& c : per_c) per.push_back(c.to_json());
  j["pooled"] = pooled.to_json();
  j["pole_censored"] = pole_censored;
  j["censored_fraction"] = censored_fraction;
  j["censor_reasons"] = censor_reasons;
  j["agrees"] = agrees;
  return j;
}

TheoremReport theorem_experiment(const Group& g, const StepDistribution& nu, const TabulatedFunction& u,
                                 const TheoremOptions& options) {
  if (options.c_list.empty()) throw InvalidArgument("no tube widths given");
  TheoremReport r;
  r.function_label = u.label();
  r.c_list = options.c_list;
  r.per_c.resize(options.c_list.size());
  int max_c = 0;
  for (auto c : options.c_list) max_c = std::max(max_c, static_cast<int>(c.ceil()));
  const auto rays = sample_boundary_rays(g, nu, options.n_thetas, options.radius + max_c + 2, options.seed);
  const auto annuli = make_annuli(1, options.radius, options.annulus_width);
  for (std::size_t t = 0; t < rays.size(); ++t) {
    const BoundaryRay& theta = rays[t];
    bool near_pole = false;
    for (const auto& pole : options.poles)
      if (gromov_product_rays(g, theta, pole, Word{}, options.pole_depth + 4) >= HalfInt(options.pole_depth))
        near_pole = true;
    if (near_pole) {
      ++r.pole_censored;
      for (auto& c : r.per_c) ++c.censored;
      r.pooled.censored += options.c_list.size();
      continue;
    }
    for (std::size_t k = 0; k < options.c_list.size(); ++k) {
      try {
        const NtReport rep = nt_report(g, u, TubeSpec(theta, options.c_list[k]), annuli, options.nt);
        if (rep.censored) {
          ++r.per_c[k].censored;
          ++r.pooled.censored;
          r.censor_reasons.push_back("theta " + std::to_string(t) + ": empty annulus");
          continue;
        }
        r.per_c[k].add(rep.verdicts);
        r.pooled.add(rep.verdicts);
      } catch (const OutOfTabulatedRange& e) {
        ++r.per_c[k].censored;
        ++r.pooled.censored;
        r.censor_reasons.push_back("theta " + std::to_string(t) + ": " + e.what());
      }
    }
  }
  const auto total = r.pooled.total();
  r.censored_fraction = total ? static_cast<double>(r.pooled.censored) / static_cast<double>(total) : 0.0;
  r.agrees = r.pooled.bounded_not_convergent == 0;
  return r;
}

nlohmann::ordered_json Lemma61Report::to_json(const Group& g) const {
  nlohmann::ordered_json j;
  j["min_estimate"] = min_estimate;
  j["sigma_at_min"] = sigma_at_min;
  j["argmin_x"] = g.format(argmin_x);
  j["argmin_ray"] = argmin_ray;
  j["oracle"] = oracle;
  j["pairs"] = pairs;
  j["pass"] = pass;
  return j;
}

double lemma61_free_oracle(HalfInt alpha) {
  if (alpha <= HalfInt(0)) return 1.0;
  return 0.25 * std::pow(1.0 / 3.0, static_cast<double>(alpha.ceil() - 1));
}

namespace {

double tree_shadow_oracle(HalfInt alpha, int degree) {
  if (alpha <= HalfInt(0)) return 1.0;
  return std::pow(1.0 / (degree - 1), static_cast<double>(alpha.ceil() - 1)) / degree;
}

// Exit points of walks from e, at radius R.
std::vector<Word> exit_points(const Group& g, const StepDistribution& nu, std::uint64_t n, int radius,
                              std::uint64_t seed, std::uint64_t offset, int workers) {
  return chunked_reduce(
      n, 256, workers, std::vector<Word>{},
      [&](std::size_t begin, std::size_t end) {
        std::vector<Word> out;
        for (std::size_t i = begin; i < end; ++i) {
          RngStream rng(seed, offset + i);
          out.push_back(run_to_exit(g, nu, Word{}, radius, rng));
        }
        return out;
      },
      [](std::vector<Word>& into, std::vector<Word> part) {
        into.insert(into.end(), std::make_move_iterator(part.begin()), std::make_move_iterator(part.end()));
      });
}

double fraction_in_shadow(const Group& g, const std::vector<Word>& ends, const Word& x, const BoundaryRay& theta,
                          HalfInt alpha, int exit_radius) {
  // (xi, theta)_x = (x^{-1} xi, x^{-1} theta)_e with x^{-1} xi an exit point.
  const int depth = length_of(g, x) + exit_radius + static_cast<int>(alpha.ceil()) + 4;
  const Word t = g.quotient(x, theta.point(g, depth));
  std::size_t hits = 0;
  for (const auto& w : ends)
    if (gromov_product(g, w, t, Word{}, 2 * depth + 2 * exit_radius + 64) >= alpha) ++hits;
  return static_cast<double>(hits) / static_cast<double>(ends.size());
}

}  // namespace

PointEstimate shadow_mass_from(const Group& g, const StepDistribution& nu, const Word& x, const BoundaryRay& theta,
                               HalfInt alpha, std::uint64_t n_traj, int exit_radius, std::uint64_t seed,
                               std::uint64_t stream_offset) {
  const auto ends = exit_points(g, nu, n_traj, exit_radius, seed, stream_offset, 1);
  PointEstimate p;
  p.x = x;
  p.count = n_traj;
  p.value = fraction_in_shadow(g, ends, x, theta, alpha, exit_radius);
  p.stderr_ = std::sqrt(p.value * (1.0 - p.value) / static_cast<double>(n_traj));
  return p;
}

Lemma61Report lemma61_check(const Group& g, const StepDistribution& nu, const Lemma61Options& options) {
  if (g.is_lattice()) throw NonHyperbolicWarning("boundary shadows on a lattice backend are not meaningful");
  std::vector<Word> points = options.points;
  if (points.empty()) points = ball(g, 3).elements();
  const auto rays = sample_boundary_rays(g, nu, options.n_rays, options.exit_radius + 8, options.seed);
  const std::uint64_t walk_seed = splitmix64(options.seed);
  Lemma61Report r;
  r.min_estimate = 2.0;
  const double n = static_cast<double>(options.n_traj);
  for (std::size_t p = 0; p < points.size(); ++p) {
    const auto ends = exit_points(g, nu, options.n_traj, options.exit_radius, walk_seed, p * options.n_traj,
                                  options.workers);
    for (std::size_t k = 0; k < rays.size(); ++k) {
      const double v = fraction_in_shadow(g, ends, points[p], rays[k], options.alpha, options.exit_radius);
      ++r.pairs;
      if (v < r.min_estimate) {
        r.min_estimate = v;
        r.sigma_at_min = std::sqrt(v * (1.0 - v) / n);
        r.argmin_x = points[p];
        r.argmin_ray = k;
      }
    }
  }
  const int degree = simple_tree_degree(g, nu);
  r.oracle = degree > 2 ? tree_shadow_oracle(options.alpha, degree) : 0.0;
  r.pass = r.oracle > 0.0 ? r.min_estimate >= r.oracle - 3.0 * r.sigma_at_min
                          : r.min_estimate - 3.0 * r.sigma_at_min > 0.0;
  return r;
}

nlohmann::ordered_json Lemma62Report::to_json(const Group& g) const {
  nlohmann::ordered_json j;
  j["eta_hat"] = eta_hat;
  j["sigma_at_min"] = sigma_at_min;
  j["argmin"] = g.format(argmin);
  j["points"] = points.size();
  j["pass"] = pass;
  return j;
}

Lemma62Report lemma62_check(const Group& g, const StepDistribution& nu, const BoundarySet& e,
                            const Lemma62Options& options) {
  std::vector<Word> candidates;
  const Ball b = ball(g, options.sample_radius);
  for (const auto& x : b.elements())
    if (in_tube_of_set(g, x, e, options.c, options.delta_hat) == TubeVerdict::Out) candidates.push_back(x);
  // Seeded partial Fisher-Yates, then shortlex order.
  RngStream pick(options.seed, 0);
  const std::size_t keep = std::min(options.n_points, candidates.size());
  for (std::size_t i = 0; i < keep; ++i) {
    const auto j = i + static_cast<std::size_t>(pick.below(candidates.size() - i));
    std::swap(candidates[i], candidates[j]);
  }
  candidates.resize(keep);
  std::sort(candidates.begin(), candidates.end());

  Lemma62Report r;
  if (candidates.empty()) return r;
  McOptions mc;
  mc.n_traj = options.n_traj;
  mc.seed = splitmix64(options.seed);
  mc.workers = options.workers;
  auto est = poisson_integral(g, nu, e, options.exit_radius, PoissonMethod::MonteCarlo, candidates, mc, {},
                              options.delta_hat);
  r.eta_hat = 2.0;
  for (auto p : est.points) {
    p.value = 1.0 - p.value;
    if (p.value < r.eta_hat) {
      r.eta_hat = p.value;
      r.sigma_at_min = p.stderr_;
      r.argmin = p.x;
    }
    r.points.push_back(p);
  }
  r.pass = r.eta_hat - 3.0 * r.sigma_at_min > 0.0;
  return r;
}

nlohmann::ordered_json CorollaryReport::to_json() const {
  nlohmann::ordered_json j;
  j["tail_in_tube"] = tail_in_tube;
  j["tail_trajectories"] = tail_trajectories;
  j["spike_radius"] = spike_radius;
  j["spikes_contained"] = spikes_contained;
  j["width_disagreements"] = width_disagreements;
  j["width_checked"] = width_checked;
  j["width_censored"] = width_censored;
  j["thetas"] = thetas;
  return j;
}

CorollaryReport corollary_checks(const Group& g, const StepDistribution& nu, const BoundarySet& e,
                                 const TabulatedFunction& u, const CorollaryOptions& options) {
  if (g.is_lattice()) throw NonHyperbolicWarning("tubes on a lattice backend are not meaningful");
  CorollaryReport r;
  // theta drawn from the harmonic measure, kept when in E.
  std::vector<BoundaryRay> thetas;
  const int freeze = std::max(options.exit_radius, options.spike_radius) + 4;
  for (std::size_t i = 0; thetas.size() < options.n_thetas && i < 50 * options.n_thetas + 50; ++i) {
    RngStream rng(options.seed, i);
    auto theta = BoundaryRay::frozen(g, run_to_exit(g, nu, Word{}, freeze, rng));
    if (e.contains(g, theta, options.delta_hat)) thetas.push_back(std::move(theta));
  }
  std::unordered_map<Word, bool, WordHash> inside;
  auto in_gamma = [&](const Word& x) {
    auto it = inside.find(x);
    if (it == inside.end())
      it = inside.emplace(x, in_tube_of_set(g, x, e, options.c, options.delta_hat) == TubeVerdict::In).first;
    return it->second;
  };

  std::uint64_t tails_in = 0;
  r.spikes_contained = !thetas.empty();
  const RngStream walks(options.seed, 1);
  const auto annuli = make_annuli(1, options.spike_radius, 2);
  for (std::size_t t = 0; t < thetas.size(); ++t) {
    const BoundaryRay& theta = thetas[t];
    r.thetas.push_back(theta.description(g));
    const auto k = ConditionedKernel::toward(g, nu, theta, options.exit_radius, options.conditioning);
    for (std::uint64_t i = 0; i < options.n_traj; ++i) {
      RngStream rng = walks.child(t * options.n_traj + i);
      const auto traj = simulate_conditioned(g, Word{}, k, StopRule::exit_ball(options.exit_radius), rng);
      const std::size_t from = traj.positions.size() * 2 / 3;
      bool ok = true;
      for (std::size_t n = from; n < traj.positions.size() && ok; ++n) ok = in_gamma(traj.positions[n]);
      tails_in += ok;
      ++r.tail_trajectories;
    }

    std::vector<int> radii;
    for (auto w : options.spike_widths) {
      const auto tp = tube_points(g, TubeSpec(theta, w), options.spike_radius, options.delta_hat);
      int needed = 0;
      for (const auto& x : tp.in)
        if (!in_gamma(x)) needed = std::max(needed, length_of(g, x));
      if (needed >= options.spike_radius) needed = -1;
      if (needed < 0) r.spikes_contained = false;
      radii.push_back(needed);
    }
    r.spike_radius.push_back(std::move(radii));

    std::optional<bool> verdict;
    bool censored = false, disagree = false;
    for (auto c : options.c_list) {
      try {
        const auto rep = nt_report(g, u, TubeSpec(theta, c), annuli);
        if (rep.censored) {
          censored = true;
          continue;
        }
        if (verdict && *verdict != rep.verdicts.bounded) disagree = true;
        verdict = rep.verdicts.bounded;
      } catch (const OutOfTabulatedRange&) {
        censored = true;
      }
    }
    if (censored)
      ++r.width_censored;
    else
      ++r.width_checked;
    r.width_disagreements += disagree;
  }
  r.tail_in_tube =
      r.tail_trajectories ? static_cast<double>(tails_in) / static_cast<double>(r.tail_trajectories) : 0.0;
  return r;
}

nlohmann::ordered_json EtaTauReport::to_json(const Group& g) const {
  nlohmann::ordered_json j;
  auto& arr = j["points"] = nlohmann::ordered_json::array();
  for (const auto& p : points) {
    nlohmann::ordered_json e;
    e["z"] = g.format(p.z);
    e["p_not_in_E"] = p.p_not_e;
    e["se_not_in_E"] = p.se_not_e;
    e["p_tau_finite"] = p.p_tau;
    e["se_tau_finite"] = p.se_tau;
    e["holds"] = p.holds;
    arr.push_back(e);
  }
  j["monotone"] = monotone;
  j["pass"] = pass;
  return j;
}

EtaTauReport eta_tau_bound_check(const Group& g, const StepDistribution& nu, const BoundarySet& e,
                                 const EtaTauOptions& options) {
  if (g.is_lattice()) throw NonHyperbolicWarning("tubes on a lattice backend are not meaningful");
  EtaTauReport r;
  std::unordered_map<Word, bool, WordHash> inside;
  auto in_gamma = [&](const Word& x) {
    auto it = inside.find(x);
    if (it == inside.end())
      it = inside.emplace(x, in_tube_of_set(g, x, e, options.c, options.delta_hat) == TubeVerdict::In).first;
    return it->second;
  };
  const StopRule stop = StopRule::exit_ball(options.exit_radius);
  const ExitTest exit(g, options.exit_radius);
  const double n = static_cast<double>(options.n_traj);
  const double eta_low = std::max(0.0, options.eta_hat - 3.0 * options.eta_sigma);
  r.pass = true;
  for (std::size_t p = 0; p < options.points.size(); ++p) {
    const Word& z = options.points[p];
    std::uint64_t not_e = 0, left = 0;
    for (std::uint64_t i = 0; i < options.n_traj; ++i) {
      RngStream rng(options.seed, p * options.n_traj + i);
      bool escaped = false;
      Word last = z;
      walk_streaming(
          z, stop, exit, [&](const Word& w) { return step(g, nu, w, rng); },
          [&](const Word& w, std::int64_t) {
            if (!escaped && !in_gamma(w)) escaped = true;
            last = w;
          });
      left += escaped;
      not_e += !e.contains(g, last, options.delta_hat);
    }
    EtaTauPoint pt;
    pt.z = z;
    pt.p_not_e = static_cast<double>(not_e) / n;
    pt.se_not_e = std::sqrt(pt.p_not_e * (1.0 - pt.p_not_e) / n);
    pt.p_tau = static_cast<double>(left) / n;
    pt.se_tau = std::sqrt(pt.p_tau * (1.0 - pt.p_tau) / n);
    const double slack = 3.0 * std::hypot(pt.se_not_e, eta_low * pt.se_tau);
    pt.holds = pt.p_not_e + slack >= eta_low * pt.p_tau;
    r.pass = r.pass && pt.holds;
    r.points.push_back(std::move(pt));
  }
  r.monotone = true;
  for (std::size_t k = 1; k < r.points.size(); ++k) {
    const auto& a = r.points[k - 1];
    const auto& b = r.points[k];
    if (b.p_tau > a.p_tau + 3.0 * std::hypot(a.se_tau, b.se_tau)) r.monotone = false;
  }
  return r;
}

nlohmann::ordered_json StoppedBoundReport::to_json() const {
  nlohmann::ordered_json j;
  j["trajectories"] = trajectories;
  j["stopped"] = stopped;
  j["violations"] = violations;
  j["pass"] = pass;
  return j;
}

StoppedBoundReport stopped_bound_check(const Group& g, const StepDistribution& nu, const TabulatedFunction& u,
                                       const std::vector<Trajectory>& trajectories, double m) {
  StoppedBoundReport r;
  for (const auto& t : trajectories) {
    ++r.trajectories;
    const auto tm = stopping_time_Tm(g, t, u, m, nu.m1());
    if (tm) ++r.stopped;
    const double cap = std::max(m, std::abs(u(t.positions.front())));
    const std::size_t last = tm ? static_cast<std::size_t>(*tm) : t.positions.size() - 1;
    for (std::size_t n = 0; n <= last && n < t.positions.size(); ++n) {
      if (std::abs(u(t.positions[n])) > cap) {
        ++r.violations;
        break;
      }
    }
  }
  r.pass = r.violations == 0;
  return r;
}

}  // namespace fatou
