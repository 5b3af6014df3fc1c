#include "fatou/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <deque>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "fatou/conditioning.hpp"
#include "fatou/delta.hpp"
#include "fatou/error.hpp"
#include "fatou/fatou_lab.hpp"
#include "fatou/metric.hpp"
#include "fatou/potential.hpp"
#include "fatou/walk.hpp"

namespace fatou::cli {

using ojson = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// ExperimentConfig

ojson ExperimentConfig::to_json() const {
  ojson j;
  j["command"] = command;
  j["group"] = group;
  j["nu"] = nu;
  j["seed"] = seed;
  j["budgets"] = {{"ball_elements", budgets.ball_elements},
                  {"steps", budgets.steps},
                  {"trajectories", budgets.trajectories}};
  ojson p = ojson::object();
  for (const auto& [k, v] : params) p[k] = v;
  j["params"] = p;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  c.command = j.at("command").get<std::string>();
  c.group = j.value("group", c.group);
  c.nu = j.value("nu", c.nu);
  c.seed = j.value("seed", c.seed);
  if (j.contains("budgets")) {
    const auto& b = j["budgets"];
    c.budgets.ball_elements = b.value("ball_elements", c.budgets.ball_elements);
    c.budgets.steps = b.value("steps", c.budgets.steps);
    c.budgets.trajectories = b.value("trajectories", c.budgets.trajectories);
  }
  if (j.contains("params"))
    for (const auto& [k, v] : j["params"].items()) c.params[k] = v.get<std::string>();
  return c;
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream s;
  s << "# " << command << "\n";
  s << "group = " << group << "\n";
  s << "nu = " << nu << "\n";
  s << "seed = " << seed << "\n";
  s << "ball-budget = " << budgets.ball_elements << "\n";
  s << "step-cap = " << budgets.steps << "\n";
  for (const auto& [k, v] : params) s << k << " = " << v << "\n";
  return s.str();
}

std::string ExperimentConfig::hash() const {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : to_json().dump()) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << h;
  return s.str();
}

std::vector<std::string> subcommands() {
  return {"delta",  "ball",         "admissible", "green",      "martin",  "measure",
          "poisson", "condition",   "desintegrate", "nt",       "stochastic", "theorem",
          "lemma61", "lemma62",     "corollaries", "eta-bound"};
}

namespace {

// ---------------------------------------------------------------------------
// Parsing helpers

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) parts.push_back(cur);
  }
  return parts;
}

Word parse_word(const Group& g, const std::string& text) {
  const std::string t = trim(text);
  if (t.empty() || t == "e") return {};
  return g.parse(t);
}

std::vector<Word> parse_words(const Group& g, const std::string& text) {
  std::vector<Word> out;
  for (const auto& p : split(text, ',')) out.push_back(parse_word(g, p));
  return out;
}

/// "2", "1.5" or "3/2".
HalfInt parse_half(const std::string& text) {
  const std::string t = trim(text);
  try {
    std::size_t used = 0;
    if (auto slash = t.find('/'); slash != std::string::npos) {
      if (trim(t.substr(slash + 1)) != "2") throw InvalidArgument("");
      const long long num = std::stoll(t.substr(0, slash), &used);
      return HalfInt::from_twice(num);
    }
    const double v = std::stod(t, &used);
    if (used != t.size() || std::abs(2 * v - std::round(2 * v)) > 1e-12) throw InvalidArgument("");
    return HalfInt::from_twice(static_cast<std::int64_t>(std::llround(2 * v)));
  } catch (const std::exception&) {
    throw InvalidArgument("'" + t + "' is not a multiple of 1/2");
  }
}

std::vector<HalfInt> parse_halves(const std::string& text) {
  std::vector<HalfInt> out;
  for (const auto& p : split(text, ',')) out.push_back(parse_half(p));
  if (out.empty()) throw InvalidArgument("empty list");
  return out;
}

std::vector<int> parse_ints(const std::string& text) {
  std::vector<int> out;
  for (const auto& p : split(text, ',')) {
    std::size_t used = 0;
    int v = 0;
    try {
      v = std::stoi(p, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != p.size() || p.empty()) throw InvalidArgument("'" + p + "' is not an integer");
    out.push_back(v);
  }
  return out;
}

/// "a b" (periodic) or "frozen:a b".
BoundaryRay parse_ray(const Group& g, const std::string& text) {
  const std::string t = trim(text);
  if (t.rfind("frozen:", 0) == 0) return BoundaryRay::frozen(g, parse_word(g, t.substr(7)));
  const Word w = parse_word(g, t);
  if (w.empty()) throw InvalidArgument("a ray needs a non-empty period");
  return BoundaryRay::periodic(g, w);
}

/// "empty", "full", or a '+'-separated union of "cyl:w", "shadow:w@r",
/// "ray:period@r".
BoundarySet parse_set(const Group& g, const std::string& text) {
  const std::string t = trim(text);
  if (t == "empty") return BoundarySet::empty();
  if (t == "full") return BoundarySet::full();
  std::vector<Shadow> shadows;
  for (const auto& item : split(t, '+')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw InvalidArgument("set item '" + item + "' needs kind:argument");
    const std::string kind = item.substr(0, colon);
    const std::string arg = item.substr(colon + 1);
    if (kind == "cyl") {
      shadows.push_back(Shadow::cylinder(parse_word(g, arg)));
      continue;
    }
    const auto at = arg.rfind('@');
    if (at == std::string::npos) throw InvalidArgument("set item '" + item + "' needs @radius");
    const HalfInt r = parse_half(arg.substr(at + 1));
    if (kind == "shadow")
      shadows.push_back(Shadow::of_word(parse_word(g, arg.substr(0, at)), r));
    else if (kind == "ray")
      shadows.push_back(Shadow::of_ray(parse_ray(g, arg.substr(0, at)), r));
    else
      throw InvalidArgument("unknown set item kind '" + kind + "'");
  }
  return BoundarySet::of(std::move(shadows));
}

struct FunctionSpec {
  TabulatedFunction f;
  std::vector<BoundaryRay> poles;
};

/// "const:v", "poisson:<set>", "martin:<ray>", "martin-diff:<ray>,<ray>".
/// Known at least on B(o, radius).
FunctionSpec build_function(const Group& g, const StepDistribution& nu, const std::string& text, int radius,
                            HalfInt delta_hat) {
  const std::string t = trim(text);
  const auto colon = t.find(':');
  if (colon == std::string::npos) throw InvalidArgument("function '" + t + "' needs kind:argument");
  const std::string kind = t.substr(0, colon);
  const std::string arg = t.substr(colon + 1);
  FunctionSpec s;
  auto martin_toward = [&](const BoundaryRay& theta) {
    return martin_function(g, nu, theta.point(g, radius), radius + 15, "K(., " + theta.description(g) + ")");
  };
  if (kind == "const") {
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(arg, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used == 0 || used != arg.size()) throw InvalidArgument("'" + arg + "' is not a number");
    s.f = TabulatedFunction::constant(v, t);
  } else if (kind == "poisson") {
    s.f = poisson_integral(g, nu, parse_set(g, arg), radius, PoissonMethod::LinearSolve, {}, {}, {}, delta_hat).f;
  } else if (kind == "martin") {
    s.poles = {parse_ray(g, arg)};
    s.f = martin_toward(s.poles[0]);
  } else if (kind == "martin-diff") {
    const auto parts = split(arg, ',');
    if (parts.size() != 2) throw InvalidArgument("martin-diff needs two rays");
    s.poles = {parse_ray(g, parts[0]), parse_ray(g, parts[1])};
    s.f = TabulatedFunction::combine(1.0, martin_toward(s.poles[0]), -1.0, martin_toward(s.poles[1]), t);
  } else {
    throw InvalidArgument("unknown function kind '" + kind + "'");
  }
  return s;
}

std::string num(double v) {
  std::ostringstream s;
  s << std::setprecision(12) << v;
  return s.str();
}

// ---------------------------------------------------------------------------
// Settings and commands

std::uint64_t default_seed() {
  if (const char* env = std::getenv(kSeedVariable)) {
    try {
      return std::stoull(env);
    } catch (const std::exception&) {
    }
  }
  return 1;
}

struct Settings {
  std::string group = "free:2";
  std::string nu = "srw";
  std::uint64_t seed = default_seed();
  int workers = default_workers();
  std::string config;
  std::string out;
  bool json = false;
  std::string delta_hat = "auto";
  int delta_radius = 3;
  std::uint64_t ball_budget = kDefaultBallBudget;
  std::int64_t step_cap = kDefaultStepCap;
  std::uint64_t n_traj = 0;

  int radius = 3;
  std::string method;
  bool exhaustive = false;
  std::uint64_t samples = 1'000'000;
  std::string center = "e";
  std::string x = "e";
  std::string y = "e";
  std::string z = "e";
  std::string theta = "a";
  std::string depths = "5,10,15";
  int margin = 15;
  std::string route = "auto";
  double tol = 1e-6;
  int bin_depth = 1;
  std::string set = "cyl:a";
  std::string points;
  int agree_depth = 1;
  std::uint64_t export_n = 0;
  std::string functional = "return";
  int horizon = 2;
  std::uint64_t n_outer = 1000;
  std::uint64_t n_inner = 100;
  int exit_radius = 12;
  std::string u = "poisson:cyl:a";
  std::string c = "1";
  int first = 1;
  int width = 2;
  int window = 3;
  std::uint64_t n_thetas = 200;
  int pole_depth = 3;
  double max_censored = 0.1;
  std::string alpha = "1";
  int point_radius = 3;
  std::uint64_t n_rays = 20;
  int sample_radius = 4;
  std::uint64_t n_points = 50;
  std::optional<double> eta;
  int l_cap = 8;
  int check_radius = 1;
  int spike_radius = 12;
  int harmonic_radius = 6;
};

struct Table {
  std::string name;
  std::string csv;
};

struct Outcome {
  ojson result;
  bool pass = true;
  std::vector<std::string> lines;
  std::vector<Table> tables;
};

struct Context {
  const Settings& s;
  const Group& g;
  const StepDistribution& nu;
  HalfInt delta_hat;

  McOptions mc() const {
    McOptions o;
    o.n_traj = s.n_traj;
    o.seed = s.seed;
    o.workers = s.workers;
    o.step_cap = s.step_cap;
    return o;
  }
  LinearOptions linear() const {
    LinearOptions o;
    o.route = parse_solver_route(s.route);
    o.ball_budget = s.ball_budget;
    return o;
  }
};

using Runner = std::function<Outcome(const Context&)>;

struct Command {
  std::string name;
  CLI::App* app = nullptr;
  Settings s;
  Runner run;
  bool uses_trajectories = false;
};

// Options not recorded in the configuration.
bool is_plumbing(const std::string& name) {
  return name == "config" || name == "out" || name == "workers" || name == "json" || name == "help" || name == "help-all";
}

void add_common(Command& cmd) {
  auto* a = cmd.app;
  Settings& s = cmd.s;
  a->add_option("--config", s.config, "Configuration file of 'key = value' lines; overrides flags");
  a->add_option("--out", s.out, "Directory for report.json, metadata.json and tables/");
  a->add_flag("--json", s.json, "Print report.json to stdout");
  a->add_option("--group", s.group, "free:2, fpc:2,3, lattice:2 or sc:a,b,c,d:<relators>");
  a->add_option("--nu", s.nu, "srw, lazy, lazy:1/3 or 'a:1/2, a\\':1/2'");
  a->add_option("--seed", s.seed, std::string("Master seed (default from ") + kSeedVariable + ")");
  a->add_option("--workers", s.workers, "Worker threads; results do not depend on it");
  a->add_option("--delta-hat", s.delta_hat, "auto, or a multiple of 1/2");
  a->add_option("--delta-radius", s.delta_radius, "Radius of the four-point estimate behind auto");
  a->add_option("--ball-budget", s.ball_budget, "Largest ball enumerated");
  a->add_option("--step-cap", s.step_cap, "Hard cap on walk steps");
}

void add_mc(Command& cmd, std::uint64_t default_n) {
  cmd.s.n_traj = default_n;
  cmd.uses_trajectories = true;
  cmd.app->add_option("--n-traj", cmd.s.n_traj, "Trajectories");
}

// ---------------------------------------------------------------------------
// Subcommand bodies

Outcome run_delta(const Context& c) {
  DeltaOptions o;
  o.method = parse_delta_method(c.s.method);
  o.exhaustive = c.s.exhaustive;
  o.samples = c.s.samples;
  o.seed = c.s.seed;
  o.workers = c.s.workers;
  o.ball_budget = c.s.ball_budget;
  const DeltaEstimate d = estimate_delta(c.g, c.s.radius, o);
  Outcome r;
  ojson w = ojson::array();
  for (const auto& x : d.witness) w.push_back(c.g.format(x));
  r.result = {{"delta", d.value.str()},
              {"method", to_string(d.method)},
              {"radius", d.radius},
              {"sample_count", d.sample_count},
              {"witness", w}};
  r.lines.push_back(d.value.str());
  return r;
}

Outcome run_ball(const Context& c) {
  const Ball b = ball(c.g, c.s.radius, parse_word(c.g, c.s.center), c.s.ball_budget);
  std::vector<std::size_t> spheres(static_cast<std::size_t>(c.s.radius) + 1, 0);
  for (std::size_t i = 0; i < b.size(); ++i) ++spheres[static_cast<std::size_t>(b.distance(i))];
  Outcome r;
  r.result = {{"center", c.g.format(b.center())}, {"radius", b.radius()}, {"size", b.size()}, {"spheres", spheres}};
  std::ostringstream csv;
  b.write_csv(csv, c.g);
  r.tables.push_back({"ball.csv", csv.str()});
  r.lines.push_back(std::to_string(b.size()));
  return r;
}

Outcome run_admissible(const Context& c) {
  const AdmissibilityReport a = validate(c.nu, c.g, c.s.l_cap, {}, c.s.check_radius);
  Outcome r;
  r.result = a.to_json(c.g);
  r.pass = a.pass;
  r.lines.push_back("m1=" + std::to_string(a.m1) + " l=" + std::to_string(a.l) +
                    " c0=" + (a.c0_exact ? a.c0_exact->str() : num(a.c0)));
  if (!a.pass) r.lines.push_back(a.diagnosis);
  return r;
}

Outcome run_green(const Context& c) {
  const Word x = parse_word(c.g, c.s.x), y = parse_word(c.g, c.s.y);
  Outcome r;
  if (c.s.method == "linear") {
    const LinearSolution sol = green_linear(c.g, c.nu, y, c.s.radius, c.linear());
    const double v = sol.f(x);
    r.result = {{"x", c.g.format(x)}, {"y", c.g.format(y)}, {"value", v}, {"method", "linear"},
                {"solve", sol.to_json()}};
    const Ball b = ball(c.g, std::min(c.s.radius, 4), {}, c.s.ball_budget);
    std::ostringstream csv;
    sol.f.write_csv(csv, c.g, b.elements());
    r.tables.push_back({"green.csv", csv.str()});
    r.lines.push_back(num(v));
  } else if (c.s.method == "mc") {
    const GreenEstimate e = green_mc(c.g, c.nu, x, y, c.s.radius, c.mc());
    r.result = e.to_json(c.g);
    r.lines.push_back(num(e.value) + " +- " + num(e.stderr_));
  } else {
    throw InvalidArgument("--method must be linear or mc");
  }
  return r;
}

Outcome run_martin(const Context& c) {
  const Word x = parse_word(c.g, c.s.x);
  Outcome r;
  if (!c.s.theta.empty() && c.s.y == "e") {
    const BoundaryRay theta = parse_ray(c.g, c.s.theta);
    StabilizationReport st;
    try {
      st = martin_kernel_at_boundary(c.g, c.nu, x, theta, parse_ints(c.s.depths), c.s.tol, c.s.margin);
    } catch (const NotStabilized& e) {
      r.pass = false;
      r.result = {{"x", c.g.format(x)}, {"theta", theta.to_json(c.g)}, {"error", e.what()}};
      r.lines.push_back(e.what());
      return r;
    }
    r.result = {{"x", c.g.format(x)}, {"theta", theta.to_json(c.g)}, {"stabilization", st.to_json()}};
    r.pass = st.stabilized;
    r.lines.push_back(num(st.value));
    return r;
  }
  const Word y = parse_word(c.g, c.s.y);
  const GreenMethod m = c.s.method == "mc" ? GreenMethod::MonteCarlo : GreenMethod::Linear;
  if (c.s.method != "mc" && c.s.method != "linear") throw InvalidArgument("--method must be linear or mc");
  const MartinEstimate k = martin_kernel(c.g, c.nu, x, y, m, c.s.margin, c.mc());
  r.result = {{"x", c.g.format(x)}, {"y", c.g.format(y)}, {"value", k.value}, {"stderr", k.stderr_},
              {"method", k.method}};
  r.lines.push_back(m == GreenMethod::Linear ? num(k.value) : num(k.value) + " +- " + num(k.stderr_));
  return r;
}

Outcome run_measure(const Context& c) {
  const Word z = parse_word(c.g, c.s.z);
  const HarmonicMeasureEstimate h =
      harmonic_measure(c.g, c.nu, z, c.s.radius, Binning::sphere(c.s.bin_depth), c.mc(), c.delta_hat);
  Outcome r;
  r.result = h.to_json(c.g);
  std::ostringstream csv;
  csv << "bin,count,probability,sigma\n";
  for (const auto& b : h.bins) {
    csv << b.label << "," << b.count << "," << num(b.probability) << "," << num(b.sigma) << "\n";
    r.lines.push_back(b.label + " " + num(b.probability) + " +- " + num(b.sigma));
  }
  r.tables.push_back({"measure.csv", csv.str()});
  return r;
}

Outcome run_poisson(const Context& c) {
  const BoundarySet e = parse_set(c.g, c.s.set);
  std::vector<Word> points = parse_words(c.g, c.s.points);
  if (points.empty()) points = {Word{}};
  Outcome r;
  ojson pts = ojson::array();
  std::ostringstream csv;
  csv << "word,value,stderr\n";
  if (c.s.method == "linear") {
    const PoissonResult p = poisson_integral(c.g, c.nu, e, c.s.radius, PoissonMethod::LinearSolve, {}, {},
                                             c.linear(), c.delta_hat);
    // Interior check: a small ball in full, deeper points along sampled walks.
    const int inner = std::max(0, c.s.radius - 1);
    const Ball near = ball(c.g, std::min(inner, c.s.harmonic_radius), {}, c.s.ball_budget);
    std::vector<Word> region = near.elements();
    const ExitTest leaves(c.g, inner);
    for (std::uint64_t i = 0; i < 64; ++i) {
      RngStream rng(c.s.seed, i);
      for (const auto& x : simulate(c.g, c.nu, Word{}, StopRule::exit_ball(inner), rng).positions)
        if (!leaves.outside(x)) region.push_back(x);
    }
    std::sort(region.begin(), region.end());
    region.erase(std::unique(region.begin(), region.end()), region.end());
    const HarmonicityReport h = is_harmonic(c.g, c.nu, p.f, region, 1e-9);
    for (const auto& x : points) {
      const double v = p.f(x);
      pts.push_back({{"x", c.g.format(x)}, {"value", v}});
      csv << c.g.format(x) << "," << num(v) << ",0\n";
      r.lines.push_back(c.g.format(x) + " " + num(v));
    }
    r.result = {{"set", e.label(c.g)},
                {"method", "linear"},
                {"radius", c.s.radius},
                {"points", pts},
                {"solve", p.solve.to_json()},
                {"laplacian_residual", h.max_residual},
                {"laplacian_checked", h.checked},
                {"harmonic", h.pass}};
    r.pass = h.pass;
  } else if (c.s.method == "mc") {
    const PoissonResult p =
        poisson_integral(c.g, c.nu, e, c.s.radius, PoissonMethod::MonteCarlo, points, c.mc(), {}, c.delta_hat);
    for (const auto& q : p.points) {
      pts.push_back({{"x", c.g.format(q.x)}, {"value", q.value}, {"stderr", q.stderr_}, {"count", q.count}});
      csv << c.g.format(q.x) << "," << num(q.value) << "," << num(q.stderr_) << "\n";
      r.lines.push_back(c.g.format(q.x) + " " + num(q.value) + " +- " + num(q.stderr_));
    }
    r.result = {{"set", e.label(c.g)}, {"method", "mc"}, {"radius", c.s.radius}, {"points", pts}};
  } else {
    throw InvalidArgument("--method must be linear or mc");
  }
  r.tables.push_back({"poisson.csv", csv.str()});
  return r;
}

Outcome run_condition(const Context& c) {
  const BoundaryRay theta = parse_ray(c.g, c.s.theta);
  const Word z = parse_word(c.g, c.s.z);
  const ConditionedKernel k = ConditionedKernel::toward(c.g, c.nu, theta, c.s.exit_radius);
  const HRow row = h_row(c.g, k, z);
  Outcome r;
  ojson jrow = ojson::array();
  for (std::size_t i = 0; i < row.targets.size(); ++i)
    jrow.push_back({{"y", c.g.format(row.targets[i])}, {"p", row.probability(i)}});

  struct Tally {
    std::uint64_t agree = 0;
    double defect = 0.0;
  };
  const int depth = default_depth(c.s.exit_radius, c.s.agree_depth, c.delta_hat);
  Tally t = chunked_reduce(
      c.s.n_traj, 64, c.s.workers, Tally{},
      [&](std::size_t begin, std::size_t end) {
        Tally part;
        for (std::size_t i = begin; i < end; ++i) {
          RngStream rng(c.s.seed, i);
          const Trajectory tr = simulate_conditioned(c.g, z, k, StopRule::exit_ball(c.s.exit_radius), rng);
          part.defect = std::max(part.defect, tr.renorm_defect);
          const Word end_point = exit_proxy(c.g, tr, c.s.exit_radius);
          part.agree += gromov_product_to_ray(c.g, end_point, theta, {}, depth) >= HalfInt(c.s.agree_depth);
        }
        return part;
      },
      [](Tally& into, Tally p) {
        into.agree += p.agree;
        into.defect = std::max(into.defect, p.defect);
      });
  const double freq = c.s.n_traj ? static_cast<double>(t.agree) / static_cast<double>(c.s.n_traj) : 0.0;
  r.result = {{"kernel", k.to_json(c.g)},
              {"z", c.g.format(z)},
              {"row", jrow},
              {"row_defect", row.defect()},
              {"exit_radius", c.s.exit_radius},
              {"agree_depth", c.s.agree_depth},
              {"exit_agreement", freq},
              {"max_renorm_defect", t.defect}};
  for (const auto& e : jrow) r.lines.push_back(e["y"].get<std::string>() + " " + num(e["p"].get<double>()));
  r.lines.push_back("exit agreement " + num(freq));
  if (c.s.export_n > 0) {
    std::ostringstream lines;
    for (std::uint64_t i = 0; i < std::min(c.s.export_n, c.s.n_traj); ++i) {
      RngStream rng(c.s.seed, i);
      lines << simulate_conditioned(c.g, z, k, StopRule::exit_ball(c.s.exit_radius), rng).to_json(c.g).dump()
            << "\n";
    }
    r.tables.push_back({"trajectories.jsonl", lines.str()});
  }
  return r;
}

Outcome run_desintegrate(const Context& c) {
  const Word z = parse_word(c.g, c.s.z);
  TrajectoryFunctional f;
  if (c.s.functional == "one") {
    f = [](const Trajectory&) { return 1.0; };
  } else if (c.s.functional == "return") {
    f = [](const Trajectory& t) { return t.positions.back().empty() ? 1.0 : 0.0; };
  } else if (c.s.functional == "visits") {
    f = [](const Trajectory& t) {
      return std::min(5.0, static_cast<double>(std::count(t.positions.begin(), t.positions.end(), Word{})));
    };
  } else {
    throw InvalidArgument("--functional must be one, return or visits");
  }
  DesintegrationOptions o;
  o.n_outer = c.s.n_outer;
  o.n_inner = c.s.n_inner;
  o.horizon = c.s.horizon;
  o.exit_radius = c.s.exit_radius;
  o.seed = c.s.seed;
  o.workers = c.s.workers;
  const DesintegrationReport d = desintegration_check(c.g, c.nu, z, f, o);
  Outcome r;
  r.result = d.to_json();
  r.result["functional"] = c.s.functional;
  r.pass = std::abs(d.z_score) < 3.0;
  r.lines.push_back("left " + num(d.left) + " +- " + num(d.left_stderr));
  r.lines.push_back("right " + num(d.right) + " +- " + num(d.right_stderr));
  r.lines.push_back("z " + num(d.z_score));
  return r;
}

std::string nt_csv(const NtReport& n) {
  std::ostringstream csv;
  csv << "r1,r2,points,uncertain,sup,osc,min,max\n";
  for (std::size_t i = 0; i < n.radii.size(); ++i)
    csv << n.radii[i].r1 << "," << n.radii[i].r2 << "," << n.points_per_annulus[i] << ","
        << n.uncertain_per_annulus[i] << "," << num(n.sup_per_annulus[i]) << "," << num(n.osc_per_annulus[i])
        << "," << num(n.min_per_annulus[i]) << "," << num(n.max_per_annulus[i]) << "\n";
  return csv.str();
}

std::string verdict_line(const NtVerdicts& v) {
  std::string s = std::string("bounded=") + (v.bounded ? "yes" : "no") + " convergent=" + (v.convergent ? "yes" : "no");
  if (v.limit) s += " limit=" + num(*v.limit);
  return s;
}

Outcome run_nt(const Context& c) {
  const BoundaryRay theta = parse_ray(c.g, c.s.theta);
  const FunctionSpec u = build_function(c.g, c.nu, c.s.u, c.s.radius + 10, c.delta_hat);
  NtOptions o;
  o.window = c.s.window;
  o.delta_hat = c.delta_hat;
  const NtReport n =
      nt_report(c.g, u.f, TubeSpec(theta, parse_half(c.s.c)), make_annuli(c.s.first, c.s.radius, c.s.width), o);
  Outcome r;
  r.result = n.to_json(c.g);
  r.result["u"] = c.s.u;
  r.tables.push_back({"nt.csv", nt_csv(n)});
  r.lines.push_back(n.censored ? "censored" : verdict_line(n.verdicts));
  return r;
}

Outcome run_stochastic(const Context& c) {
  const BoundaryRay theta = parse_ray(c.g, c.s.theta);
  const Word z = parse_word(c.g, c.s.z);
  const FunctionSpec u = build_function(c.g, c.nu, c.s.u, c.s.exit_radius + c.nu.m1() + 10, c.delta_hat);
  const ConditionedKernel k = ConditionedKernel::toward(c.g, c.nu, theta, c.s.exit_radius);
  StochasticOptions o;
  o.n_traj = c.s.n_traj;
  o.seed = c.s.seed;
  o.exit_radius = c.s.exit_radius;
  o.window = c.s.window;
  o.workers = c.s.workers;
  const StochasticReport s = stochastic_report(c.g, u.f, k, z, o);
  Outcome r;
  r.result = s.to_json();
  r.result["u"] = c.s.u;
  std::ostringstream csv;
  csv << "trajectory,sup_thickened,sup_path,tail_osc,tail_limit\n";
  for (std::size_t i = 0; i < s.sup_path.size(); ++i)
    csv << i << "," << num(s.sup_thickened[i]) << "," << num(s.sup_path[i]) << "," << num(s.tail_osc[i]) << ","
        << num(s.tail_limit[i]) << "\n";
  r.tables.push_back({"stochastic.csv", csv.str()});
  r.lines.push_back("bounded " + num(s.fraction_bounded) + " convergent " + num(s.fraction_convergent) +
                    " censored " + std::to_string(s.censored));
  return r;
}

std::string contingency_csv(const TheoremReport& t) {
  std::ostringstream csv;
  csv << "c,bounded_convergent,bounded_not_convergent,not_bounded_convergent,not_bounded_not_convergent,censored\n";
  auto row = [&](const std::string& label, const Contingency& k) {
    csv << label << "," << k.bounded_convergent << "," << k.bounded_not_convergent << ","
        << k.not_bounded_convergent << "," << k.not_bounded_not_convergent << "," << k.censored << "\n";
  };
  for (std::size_t i = 0; i < t.per_c.size(); ++i) row(t.c_list[i].str(), t.per_c[i]);
  row("pooled", t.pooled);
  return csv.str();
}

Outcome run_theorem(const Context& c) {
  const FunctionSpec u = build_function(c.g, c.nu, c.s.u, c.s.radius + 10, c.delta_hat);
  TheoremOptions o;
  o.n_thetas = c.s.n_thetas;
  o.c_list = parse_halves(c.s.c);
  o.radius = c.s.radius;
  o.annulus_width = c.s.width;
  o.seed = c.s.seed;
  o.poles = u.poles;
  o.pole_depth = c.s.pole_depth;
  o.nt.window = c.s.window;
  o.nt.delta_hat = c.delta_hat;
  const TheoremReport t = theorem_experiment(c.g, c.nu, u.f, o);
  Outcome r;
  r.result = t.to_json();
  r.result["u"] = c.s.u;
  r.result["max_censored"] = c.s.max_censored;
  r.pass = t.agrees && t.censored_fraction <= c.s.max_censored;
  r.tables.push_back({"contingency.csv", contingency_csv(t)});
  const Contingency& p = t.pooled;
  r.lines.push_back("B&C " + std::to_string(p.bounded_convergent) + "  B&!C " +
                    std::to_string(p.bounded_not_convergent) + "  !B&C " + std::to_string(p.not_bounded_convergent) +
                    "  !B&!C " + std::to_string(p.not_bounded_not_convergent) + "  censored " +
                    std::to_string(p.censored));
  r.lines.push_back("censored fraction " + num(t.censored_fraction));
  return r;
}

Outcome run_lemma61(const Context& c) {
  Lemma61Options o;
  o.alpha = parse_half(c.s.alpha);
  const Ball b = ball(c.g, c.s.point_radius, {}, c.s.ball_budget);
  o.points = b.elements();
  o.n_rays = c.s.n_rays;
  o.n_traj = c.s.n_traj;
  o.exit_radius = c.s.exit_radius;
  o.seed = c.s.seed;
  o.workers = c.s.workers;
  const Lemma61Report l = lemma61_check(c.g, c.nu, o);
  Outcome r;
  r.result = l.to_json(c.g);
  r.pass = l.pass;
  r.lines.push_back("min " + num(l.min_estimate) + " +- " + num(l.sigma_at_min) + " at x=" + c.g.format(l.argmin_x));
  return r;
}

Lemma62Report lemma62_for(const Context& c, const BoundarySet& e) {
  Lemma62Options o;
  o.c = parse_half(c.s.c);
  o.sample_radius = c.s.sample_radius;
  o.n_points = c.s.n_points;
  o.n_traj = c.s.n_traj;
  o.exit_radius = c.s.exit_radius;
  o.seed = c.s.seed;
  o.delta_hat = c.delta_hat;
  o.workers = c.s.workers;
  return lemma62_check(c.g, c.nu, e, o);
}

Outcome run_lemma62(const Context& c) {
  const Lemma62Report l = lemma62_for(c, parse_set(c.g, c.s.set));
  Outcome r;
  r.result = l.to_json(c.g);
  r.pass = l.pass;
  std::ostringstream csv;
  csv << "word,escape,stderr\n";
  for (const auto& p : l.points) csv << c.g.format(p.x) << "," << num(p.value) << "," << num(p.stderr_) << "\n";
  r.tables.push_back({"lemma62.csv", csv.str()});
  r.lines.push_back("eta " + num(l.eta_hat) + " +- " + num(l.sigma_at_min) + " at x=" + c.g.format(l.argmin));
  return r;
}

Outcome run_corollaries(const Context& c) {
  const BoundarySet e = parse_set(c.g, c.s.set);
  CorollaryOptions o;
  o.c = parse_half(c.s.c);
  o.n_thetas = c.s.n_thetas;
  o.n_traj = c.s.n_traj;
  o.exit_radius = c.s.exit_radius;
  o.spike_radius = c.s.spike_radius;
  o.seed = c.s.seed;
  o.delta_hat = c.delta_hat;
  const int u_radius = std::max(c.s.exit_radius, c.s.spike_radius) + 10;
  const FunctionSpec u = build_function(c.g, c.nu, c.s.u, u_radius, c.delta_hat);
  const CorollaryReport k = corollary_checks(c.g, c.nu, e, u.f, o);
  Outcome r;
  r.result = k.to_json();
  r.result["u"] = c.s.u;
  r.pass = k.tail_in_tube >= 0.95 && k.spikes_contained && k.width_disagreements == 0;
  r.lines.push_back("tail in tube " + num(k.tail_in_tube));
  r.lines.push_back(std::string("spikes contained ") + (k.spikes_contained ? "yes" : "no"));
  r.lines.push_back("width disagreements " + std::to_string(k.width_disagreements) + " of " +
                    std::to_string(k.width_checked));
  return r;
}

Outcome run_eta_bound(const Context& c) {
  const BoundarySet e = parse_set(c.g, c.s.set);
  EtaTauOptions o;
  o.c = parse_half(c.s.c);
  o.points = parse_words(c.g, c.s.points);
  if (o.points.empty()) throw InvalidArgument("--points is required");
  o.n_traj = c.s.n_traj;
  o.exit_radius = c.s.exit_radius;
  o.seed = c.s.seed;
  o.delta_hat = c.delta_hat;
  Outcome r;
  if (c.s.eta) {
    o.eta_hat = *c.s.eta;
  } else {
    const Lemma62Report l = lemma62_for(c, e);
    o.eta_hat = l.eta_hat;
    o.eta_sigma = l.sigma_at_min;
    r.result["eta"] = l.to_json(c.g);
  }
  const EtaTauReport t = eta_tau_bound_check(c.g, c.nu, e, o);
  r.result["bound"] = t.to_json(c.g);
  r.pass = t.pass;
  std::ostringstream csv;
  csv << "word,p_not_e,se_not_e,p_tau,se_tau,holds\n";
  for (const auto& p : t.points) {
    csv << c.g.format(p.z) << "," << num(p.p_not_e) << "," << num(p.se_not_e) << "," << num(p.p_tau) << ","
        << num(p.se_tau) << "," << (p.holds ? 1 : 0) << "\n";
    r.lines.push_back(c.g.format(p.z) + " P(not E) " + num(p.p_not_e) + " P(tau<inf) " + num(p.p_tau));
  }
  r.tables.push_back({"eta_bound.csv", csv.str()});
  r.lines.push_back("eta " + num(o.eta_hat));
  return r;
}

// ---------------------------------------------------------------------------
// Application assembly

struct App {
  CLI::App app{"Random walks on hyperbolic groups: boundary behaviour of harmonic functions", "fatou"};
  std::deque<Command> commands;

  Command& add(const std::string& name, const std::string& help, Runner run) {
    commands.push_back(Command{name, app.add_subcommand(name, help), Settings{}, std::move(run)});
    add_common(commands.back());
    return commands.back();
  }

  App() {
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast)->always_capture_default();
    app.set_help_all_flag("--help-all", "Help for every subcommand");

    {
      auto& c = add("delta", "Hyperbolicity constant of a ball", run_delta);
      c.s.method = "four-point";
      c.app->add_option("--radius", c.s.radius, "Ball radius");
      c.app->add_option("--method", c.s.method, "four-point or thin-triangle");
      c.app->add_flag("--exhaustive", c.s.exhaustive, "Enumerate every configuration");
      c.app->add_option("--samples", c.s.samples, "Sampled configurations when not exhaustive");
    }
    {
      auto& c = add("ball", "Enumerate a ball of the Cayley graph", run_ball);
      c.app->add_option("--radius", c.s.radius, "Ball radius");
      c.app->add_option("--center", c.s.center, "Center word");
    }
    {
      auto& c = add("admissible", "Admissibility constants (m1, l, c0) of nu", run_admissible);
      c.app->add_option("--l-cap", c.s.l_cap, "Largest l tried");
      c.app->add_option("--check-radius", c.s.check_radius, "Radius of the checked neighbourhood");
    }
    {
      auto& c = add("green", "Truncated Green function G_R(x, y)", run_green);
      c.s.radius = 20;
      c.s.method = "linear";
      add_mc(c, 100'000);
      c.app->add_option("--x", c.s.x, "Start");
      c.app->add_option("--y", c.s.y, "Target");
      c.app->add_option("--radius", c.s.radius, "Truncation radius R");
      c.app->add_option("--method", c.s.method, "linear or mc");
      c.app->add_option("--route", c.s.route, "auto, explicit or lumped");
    }
    {
      auto& c = add("martin", "Martin kernel K(x, y) or its limit along a ray", run_martin);
      c.s.method = "linear";
      c.s.theta = "";
      add_mc(c, 100'000);
      c.app->add_option("--x", c.s.x, "Point");
      c.app->add_option("--y", c.s.y, "Group element (ignored when --theta is given)");
      c.app->add_option("--theta", c.s.theta, "Periodic ray, or frozen:<word>");
      c.app->add_option("--depths", c.s.depths, "Depths along the ray");
      c.app->add_option("--margin", c.s.margin, "Extra solve radius");
      c.app->add_option("--tol", c.s.tol, "Stabilization tolerance");
      c.app->add_option("--method", c.s.method, "linear or mc");
    }
    {
      auto& c = add("measure", "Harmonic measure of sphere cells", run_measure);
      c.s.radius = 12;
      add_mc(c, 100'000);
      c.app->add_option("--z", c.s.z, "Start");
      c.app->add_option("--radius", c.s.radius, "Exit radius");
      c.app->add_option("--bin-depth", c.s.bin_depth, "Sphere radius of the bins");
    }
    {
      auto& c = add("poisson", "Poisson integral of a boundary set", run_poisson);
      c.s.radius = 20;
      c.s.method = "linear";
      c.s.points = "e";
      add_mc(c, 100'000);
      c.app->add_option("--set", c.s.set, "empty, full, or cyl:w + shadow:w@r + ray:p@r");
      c.app->add_option("--radius", c.s.radius, "Dirichlet radius");
      c.app->add_option("--points", c.s.points, "Comma separated words");
      c.app->add_option("--method", c.s.method, "linear or mc");
      c.app->add_option("--harmonic-radius", c.s.harmonic_radius, "Ball checked in full for harmonicity");
      c.app->add_option("--route", c.s.route, "auto, explicit or lumped");
    }
    {
      auto& c = add("condition", "Walks conditioned toward a boundary point", run_condition);
      c.s.exit_radius = 15;
      add_mc(c, 10'000);
      c.app->add_option("--theta", c.s.theta, "Periodic ray, or frozen:<word>");
      c.app->add_option("--z", c.s.z, "Start");
      c.app->add_option("--exit-radius", c.s.exit_radius, "Exit radius");
      c.app->add_option("--agree-depth", c.s.agree_depth, "Counted when (exit, theta)_o >= this");
      c.app->add_option("--export", c.s.export_n, "Trajectories written to tables/trajectories.jsonl");
    }
    {
      auto& c = add("desintegrate", "Plain expectation versus its boundary desintegration", run_desintegrate);
      c.app->add_option("--z", c.s.z, "Start");
      c.app->add_option("--functional", c.s.functional, "one, return (X_h = e) or visits (min(visits to e, 5))");
      c.app->add_option("--horizon", c.s.horizon, "Steps seen by the functional");
      c.app->add_option("--n-outer", c.s.n_outer, "Sampled boundary points");
      c.app->add_option("--n-inner", c.s.n_inner, "Conditioned walks per point");
      c.app->add_option("--exit-radius", c.s.exit_radius, "Radius of the exit proxy");
    }
    {
      auto& c = add("nt", "Non-tangential behaviour of u along one ray", run_nt);
      c.s.radius = 20;
      c.app->add_option("--u", c.s.u, "const:v, poisson:<set>, martin:<ray> or martin-diff:<ray>,<ray>");
      c.app->add_option("--theta", c.s.theta, "Periodic ray, or frozen:<word>");
      c.app->add_option("--c", c.s.c, "Tube width");
      c.app->add_option("--radius", c.s.radius, "Outer annulus radius");
      c.app->add_option("--first", c.s.first, "Inner annulus radius");
      c.app->add_option("--width", c.s.width, "Annulus width");
      c.app->add_option("--window", c.s.window, "Annuli used by the verdicts");
    }
    {
      auto& c = add("stochastic", "u along walks conditioned toward theta", run_stochastic);
      c.s.exit_radius = 15;
      c.s.window = 5;
      add_mc(c, 1000);
      c.app->add_option("--u", c.s.u, "const:v, poisson:<set>, martin:<ray> or martin-diff:<ray>,<ray>");
      c.app->add_option("--theta", c.s.theta, "Periodic ray, or frozen:<word>");
      c.app->add_option("--z", c.s.z, "Start");
      c.app->add_option("--exit-radius", c.s.exit_radius, "Exit radius");
      c.app->add_option("--window", c.s.window, "Tail positions used for the oscillation");
    }
    {
      auto& c = add("theorem", "Bounded versus convergent over sampled boundary points", run_theorem);
      c.s.radius = 20;
      c.s.c = "1,2";
      c.app->add_option("--u", c.s.u, "const:v, poisson:<set>, martin:<ray> or martin-diff:<ray>,<ray>");
      c.app->add_option("--n-thetas", c.s.n_thetas, "Sampled boundary points");
      c.app->add_option("--c", c.s.c, "Comma separated tube widths");
      c.app->add_option("--radius", c.s.radius, "Outer annulus radius");
      c.app->add_option("--width", c.s.width, "Annulus width");
      c.app->add_option("--window", c.s.window, "Annuli used by the verdicts");
      c.app->add_option("--pole-depth", c.s.pole_depth, "Censor theta with (theta, pole)_o >= this");
      c.app->add_option("--max-censored", c.s.max_censored, "Largest acceptable censored fraction");
    }
    {
      auto& c = add("lemma61", "Uniform lower bound on shadow masses seen from x", run_lemma61);
      c.s.exit_radius = 10;
      add_mc(c, 4000);
      c.app->add_option("--alpha", c.s.alpha, "Shadow depth");
      c.app->add_option("--point-radius", c.s.point_radius, "x ranges over B(o, r)");
      c.app->add_option("--n-rays", c.s.n_rays, "Sampled boundary points");
      c.app->add_option("--exit-radius", c.s.exit_radius, "Exit radius");
    }
    {
      auto& c = add("lemma62", "Escape probability from outside a tube set", run_lemma62);
      add_mc(c, 4000);
      c.app->add_option("--set", c.s.set, "empty, full, or cyl:w + shadow:w@r + ray:p@r");
      c.app->add_option("--c", c.s.c, "Tube width");
      c.app->add_option("--sample-radius", c.s.sample_radius, "Candidates lie in B(o, r)");
      c.app->add_option("--n-points", c.s.n_points, "Sampled candidates");
      c.app->add_option("--exit-radius", c.s.exit_radius, "Exit radius");
    }
    {
      auto& c = add("corollaries", "Tube set containment and width independence", run_corollaries);
      c.s.c = "2";
      c.s.n_thetas = 5;
      c.s.exit_radius = 15;
      add_mc(c, 200);
      c.app->add_option("--set", c.s.set, "empty, full, or cyl:w + shadow:w@r + ray:p@r");
      c.app->add_option("--u", c.s.u, "Function for the width comparison");
      c.app->add_option("--c", c.s.c, "Tube width");
      c.app->add_option("--n-thetas", c.s.n_thetas, "Sampled boundary points in the set");
      c.app->add_option("--exit-radius", c.s.exit_radius, "Exit radius");
      c.app->add_option("--spike-radius", c.s.spike_radius, "Radius of the spike check");
    }
    {
      auto& c = add("eta-bound", "P(exit not in E) >= eta P(leave the tube set)", run_eta_bound);
      c.s.c = "2";
      c.s.exit_radius = 14;
      c.s.points = "a a a";
      add_mc(c, 4000);
      c.app->add_option("--set", c.s.set, "empty, full, or cyl:w + shadow:w@r + ray:p@r");
      c.app->add_option("--c", c.s.c, "Tube width");
      c.app->add_option("--points", c.s.points, "Comma separated start points");
      c.app->add_option("--eta", c.s.eta, "Escape constant; estimated when absent");
      c.app->add_option("--sample-radius", c.s.sample_radius, "Candidates for the eta estimate");
      c.app->add_option("--n-points", c.s.n_points, "Candidates for the eta estimate");
      c.app->add_option("--exit-radius", c.s.exit_radius, "Exit radius");
    }
  }

  Command* selected() {
    for (auto& c : commands)
      if (c.app->parsed()) return &c;
    return nullptr;
  }
};

int parse(App& a, const std::vector<std::string>& args) {
  std::vector<std::string> reversed(args.rbegin(), args.rend());
  a.app.parse(reversed);
  return 0;
}

struct ConfigEntry {
  std::string key, value;
  int line = 0;
};

std::vector<ConfigEntry> read_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  std::vector<ConfigEntry> entries;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string t = trim(raw);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(line) + ": expected 'key = value'");
    ConfigEntry e{trim(t.substr(0, eq)), trim(t.substr(eq + 1)), line};
    if (e.key.empty()) throw ConfigError(path + ":" + std::to_string(line) + ": empty key");
    entries.push_back(std::move(e));
  }
  return entries;
}

ExperimentConfig resolved_config(const Command& cmd) {
  ExperimentConfig c;
  c.command = cmd.name;
  c.group = cmd.s.group;
  c.nu = cmd.s.nu;
  c.seed = cmd.s.seed;
  c.budgets.ball_elements = cmd.s.ball_budget;
  c.budgets.steps = cmd.s.step_cap;
  c.budgets.trajectories = cmd.uses_trajectories ? cmd.s.n_traj : 0;
  for (const CLI::Option* o : cmd.app->get_options()) {
    const std::string name = o->get_single_name();
    if (is_plumbing(name) || name == "group" || name == "nu" || name == "seed" || name == "ball-budget" ||
        name == "step-cap")
      continue;
    std::string value;
    if (!o->results().empty())
      value = o->results().back();
    else
      value = o->get_default_str();
    if (value.empty() && name == "eta") continue;
    c.params[name] = value;
  }
  return c;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

bool is_config_error(const Error& e) {
  return dynamic_cast<const InvalidArgument*>(&e) || dynamic_cast<const UnknownGenerator*>(&e) ||
         dynamic_cast<const InvalidPresentation*>(&e) || dynamic_cast<const NotGenerating*>(&e) ||
         dynamic_cast<const NonHyperbolicWarning*>(&e) || dynamic_cast<const BudgetExceeded*>(&e) ||
         dynamic_cast<const PreconditionViolated*>(&e);
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream f(p, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + p.string());
  f << text;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  const auto started = std::chrono::steady_clock::now();
  const std::string started_at = utc_now();
  auto app = std::make_unique<App>();
  if (!args.empty() && !args[0].empty() && args[0][0] != '-') {
    const auto names = subcommands();
    if (std::find(names.begin(), names.end(), args[0]) == names.end()) {
      err << "error: unknown subcommand '" << args[0] << "'\n\n" << app->app.help();
      return kExitConfig;
    }
  }
  try {
    parse(*app, args);
  } catch (const CLI::CallForHelp&) {
    out << app->app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app->app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n" << app->app.help();
    return kExitConfig;
  }

  Command* cmd = app->selected();
  if (!cmd) {
    err << app->app.help();
    return kExitConfig;
  }

  // Config file entries are appended after the flags; TakeLast lets them win.
  if (!cmd->s.config.empty()) {
    const std::string path = cmd->s.config;
    std::vector<ConfigEntry> entries;
    try {
      entries = read_config(path);
    } catch (const ConfigError& e) {
      err << "error: " << e.what() << "\n";
      return kExitConfig;
    }
    std::vector<std::string> merged = args;
    for (const auto& e : entries) {
      const CLI::Option* o = cmd->app->get_option_no_throw("--" + e.key);
      if (!o || e.key == "config") {
        err << "error: " << path << ":" << e.line << ": unknown field '" << e.key << "' for " << cmd->name << "\n";
        return kExitConfig;
      }
      merged.push_back("--" + e.key + "=" + e.value);
    }
    const std::string name = cmd->name;
    app = std::make_unique<App>();
    try {
      parse(*app, merged);
    } catch (const CLI::ParseError& e) {
      const std::string what = e.what();
      std::string where;
      for (const auto& entry : entries)
        if (what.find("--" + entry.key) != std::string::npos) where = path + ":" + std::to_string(entry.line) + ": ";
      err << "error: " << where << what << "\n";
      return kExitConfig;
    }
    cmd = app->selected();
    if (!cmd || cmd->name != name) {
      err << "error: " << path << ": changes the subcommand\n";
      return kExitConfig;
    }
  }

  const Settings& s = cmd->s;
  std::optional<Group> group;
  std::optional<StepDistribution> nu;
  try {
    group.emplace(GroupSpec::parse(s.group));
  } catch (const Error& e) {
    err << "error: field 'group': " << e.what() << "\n";
    return kExitConfig;
  }
  try {
    nu.emplace(StepDistribution::parse(*group, s.nu));
  } catch (const Error& e) {
    err << "error: field 'nu': " << e.what() << "\n";
    return kExitConfig;
  }

  const ExperimentConfig config = resolved_config(*cmd);
  ojson report;
  report["command"] = cmd->name;
  report["config"] = config.to_json();
  report["config_hash"] = config.hash();
  report["seed"] = s.seed;

  Outcome outcome;
  try {
    HalfInt delta_hat;
    ojson delta_json;
    if (s.delta_hat == "auto") {
      if (group->is_tree() || group->is_lattice()) {
        delta_json = {{"value", "0"}, {"source", group->is_tree() ? "tree" : "not hyperbolic"}};
      } else {
        DeltaOptions o;
        o.workers = s.workers;
        o.ball_budget = s.ball_budget;
        o.seed = s.seed;
        delta_hat = estimate_delta(*group, s.delta_radius, o).value;
        delta_json = {{"value", delta_hat.str()}, {"source", "four-point R=" + std::to_string(s.delta_radius)}};
      }
    } else {
      delta_hat = parse_half(s.delta_hat);
      delta_json = {{"value", delta_hat.str()}, {"source", "given"}};
    }
    report["delta_hat"] = delta_json;
    report["admissibility"] = validate(*nu, *group).to_json(*group);
    report["nu"] = nu->to_json(*group);
    const Context ctx{s, *group, *nu, delta_hat};
    outcome = cmd->run(ctx);
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return is_config_error(e) ? kExitConfig : kExitFailed;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  report["result"] = outcome.result;
  report["pass"] = outcome.pass;

  for (const auto& l : outcome.lines) out << l << "\n";
  if (s.json) out << report.dump(2) << "\n";

  if (!s.out.empty()) {
    namespace fs = std::filesystem;
    try {
      const fs::path dir(s.out);
      fs::create_directories(dir / "tables");
      write_file(dir / "report.json", report.dump(2) + "\n");
      write_file(dir / "config.txt", config.to_text());
      for (const auto& t : outcome.tables) write_file(dir / "tables" / t.name, t.csv);
      const double elapsed =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      ojson meta;
      meta["config_hash"] = config.hash();
      meta["started_at"] = started_at;
      meta["finished_at"] = utc_now();
      meta["elapsed_seconds"] = elapsed;
      meta["workers"] = s.workers;
      meta["args"] = args;
      write_file(dir / "metadata.json", meta.dump(2) + "\n");
    } catch (const std::exception& e) {
      err << "error: " << e.what() << "\n";
      return kExitConfig;
    }
  }
  return outcome.pass ? kExitOk : kExitFailed;
}

}  // namespace fatou::cli
