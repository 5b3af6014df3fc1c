#include "fatou/walk.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "fatou/tabulated.hpp"

namespace fatou {

namespace {

using i128 = __int128;

i128 gcd128(i128 a, i128 b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    i128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

// Exact fraction with an overflow flag; exactness is dropped, not faked,
// once denominators grow past 2^62.
struct Q {
  i128 n = 0, d = 1;
  bool ok = true;

  void reduce() {
    i128 g = gcd128(n, d);
    if (g > 1) {
      n /= g;
      d /= g;
    }
    constexpr i128 limit = static_cast<i128>(1) << 62;
    if (d > limit || n > limit || n < -limit) ok = false;
  }
  friend Q operator+(Q a, const Q& b) {
    Q r{a.n * b.d + b.n * a.d, a.d * b.d, a.ok && b.ok};
    r.reduce();
    return r;
  }
  friend Q operator*(const Q& a, const Q& b) {
    Q r{a.n * b.n, a.d * b.d, a.ok && b.ok};
    r.reduce();
    return r;
  }
  friend bool operator<(const Q& a, const Q& b) { return a.n * b.d < b.n * a.d; }
};

Q to_q(const Rational& r) {
  Q q{r.num, r.den};
  q.reduce();
  return q;
}

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::string Rational::str() const {
  if (den == 1) return std::to_string(num);
  return std::to_string(num) + "/" + std::to_string(den);
}

Rational Rational::parse(const std::string& raw) {
  const std::string text = trim(raw);
  try {
    auto slash = text.find('/');
    if (slash != std::string::npos) {
      std::size_t pos = 0;
      Rational r{std::stoll(text.substr(0, slash), &pos), std::stoll(text.substr(slash + 1))};
      if (r.den <= 0) throw InvalidArgument("non-positive denominator in '" + text + "'");
      Q q = to_q(r);
      return {static_cast<std::int64_t>(q.n), static_cast<std::int64_t>(q.d)};
    }
    auto dot = text.find('.');
    if (dot == std::string::npos) return {std::stoll(text), 1};
    const std::string digits = text.substr(0, dot) + text.substr(dot + 1);
    const auto decimals = text.size() - dot - 1;
    if (decimals > 15) throw InvalidArgument("too many decimals in '" + text + "'");
    std::int64_t den = 1;
    for (std::size_t i = 0; i < decimals; ++i) den *= 10;
    Q q = to_q({std::stoll(digits), den});
    return {static_cast<std::int64_t>(q.n), static_cast<std::int64_t>(q.d)};
  } catch (const std::logic_error&) {
    throw InvalidArgument("cannot parse probability '" + text + "'");
  }
}

StepDistribution StepDistribution::srw(const Group& g) {
  std::vector<StepEntry> entries;
  const auto n = static_cast<std::int64_t>(g.generating_set().size());
  for (Letter z : g.generating_set()) entries.push_back({Word({z}), 1.0 / static_cast<double>(n), Rational{1, n}});
  return from_entries(g, std::move(entries), "srw");
}

StepDistribution StepDistribution::lazy(const Group& g, Rational hold) {
  if (hold.num <= 0 || hold.num >= hold.den) throw InvalidArgument("holding probability must lie in (0,1)");
  std::vector<StepEntry> entries;
  entries.push_back({Word{}, hold.value(), hold});
  const auto n = static_cast<std::int64_t>(g.generating_set().size());
  Q rest = to_q({hold.den - hold.num, hold.den}) * Q{1, n};
  Rational each{static_cast<std::int64_t>(rest.n), static_cast<std::int64_t>(rest.d)};
  for (Letter z : g.generating_set()) entries.push_back({Word({z}), each.value(), each});
  return from_entries(g, std::move(entries), "lazy:" + hold.str());
}

StepDistribution StepDistribution::point_mass(const Group& g, const Word& z) {
  return from_entries(g, {{z, 1.0, Rational{1, 1}}}, "point:" + g.format(z));
}

StepDistribution StepDistribution::from_entries(const Group& g, std::vector<StepEntry> entries,
                                                std::string label) {
  StepDistribution nu;
  nu.label_ = std::move(label);
  std::vector<StepEntry> merged;
  for (auto& e : entries) {
    e.z = g.normalize(e.z.letters());
    if (!(e.p > 0.0)) throw InvalidArgument("step probabilities must be > 0");
    auto it = std::find_if(merged.begin(), merged.end(), [&](const StepEntry& m) { return m.z == e.z; });
    if (it == merged.end()) {
      merged.push_back(e);
      continue;
    }
    it->p += e.p;
    if (it->exact && e.exact) {
      Q s = to_q(*it->exact) + to_q(*e.exact);
      it->exact = Rational{static_cast<std::int64_t>(s.n), static_cast<std::int64_t>(s.d)};
    } else {
      it->exact.reset();
    }
  }
  std::sort(merged.begin(), merged.end(), [](const StepEntry& a, const StepEntry& b) { return a.z < b.z; });
  nu.entries_ = std::move(merged);
  nu.finish(g);
  return nu;
}

void StepDistribution::finish(const Group& g) {
  if (entries_.empty()) throw InvalidArgument("empty step distribution");
  exact_ = std::all_of(entries_.begin(), entries_.end(), [](const StepEntry& e) { return e.exact.has_value(); });
  if (exact_) {
    Q sum;
    for (const auto& e : entries_) sum = sum + to_q(*e.exact);
    if (!sum.ok || sum.n != sum.d) throw InvalidArgument("exact step probabilities do not sum to 1");
  }
  double total = 0.0;
  cumulative_.clear();
  single_letter_.clear();
  m1_ = 0;
  for (const auto& e : entries_) {
    total += e.p;
    cumulative_.push_back(total);
    single_letter_.push_back(e.z.size() == 1 ? std::optional<Letter>(e.z[0]) : std::nullopt);
    m1_ = std::max(m1_, g.word_length(e.z));
  }
  if (std::abs(total - 1.0) > 1e-12) throw InvalidArgument("step probabilities sum to " + std::to_string(total));
  total_ = total;
  symmetric_ = true;
  for (const auto& e : entries_)
    if (std::abs(probability(g.inverse(e.z)) - e.p) > 1e-15) symmetric_ = false;
}

StepDistribution StepDistribution::parse(const Group& g, const std::string& raw) {
  const std::string text = trim(raw);
  if (text == "srw") return srw(g);
  if (text == "lazy") return lazy(g);
  if (text.rfind("lazy:", 0) == 0) return lazy(g, Rational::parse(text.substr(5)));
  std::vector<StepEntry> entries;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    auto colon = item.rfind(':');
    if (colon == std::string::npos) throw InvalidArgument("expected 'word:probability', got '" + item + "'");
    Rational r = Rational::parse(item.substr(colon + 1));
    Word z = g.parse(trim(item.substr(0, colon)));
    entries.push_back({z, r.value(), r});
  }
  return from_entries(g, std::move(entries), text);
}

double StepDistribution::probability(const Word& z) const {
  for (const auto& e : entries_)
    if (e.z == z) return e.p;
  return 0.0;
}

std::optional<std::pair<double, double>> StepDistribution::nearest_neighbour_uniform(const Group& g) const {
  double hold = probability(Word{});
  const auto& z = g.generating_set();
  std::size_t matched = 0;
  double q = -1.0;
  for (const auto& e : entries_) {
    if (e.z.empty()) continue;
    if (e.z.size() != 1 || std::find(z.begin(), z.end(), e.z[0]) == z.end()) return std::nullopt;
    if (q < 0) q = e.p;
    if (std::abs(e.p - q) > 1e-15) return std::nullopt;
    ++matched;
  }
  if (matched != z.size()) return std::nullopt;
  return std::make_pair(hold, q);
}

nlohmann::ordered_json StepDistribution::to_json(const Group& g) const {
  nlohmann::ordered_json j;
  j["label"] = label_;
  j["m1"] = m1_;
  j["symmetric"] = symmetric_;
  auto& support = j["support"] = nlohmann::ordered_json::array();
  for (const auto& e : entries_) {
    nlohmann::ordered_json s;
    s["word"] = g.format(e.z);
    s["p"] = e.p;
    if (e.exact) s["exact"] = e.exact->str();
    support.push_back(s);
  }
  return j;
}

nlohmann::ordered_json AdmissibilityReport::to_json(const Group& g) const {
  nlohmann::ordered_json j;
  j["m1"] = m1;
  j["l"] = l;
  j["c0"] = c0;
  if (c0_exact) j["c0_exact"] = c0_exact->str();
  j["pass"] = pass;
  j["check_radius"] = check_radius;
  j["center"] = g.format(center);
  if (!diagnosis.empty()) j["diagnosis"] = diagnosis;
  return j;
}

AdmissibilityReport validate(const StepDistribution& nu, const Group& g, int l_cap, const Word& center,
                             int check_radius) {
  AdmissibilityReport report;
  report.m1 = nu.m1();
  report.check_radius = check_radius;
  report.center = center;

  // Semigroup reachability of B(center, check_radius), allowing detours.
  {
    Ball region = ball(g, check_radius + 2 * nu.m1() + 2, center);
    std::unordered_set<Word, WordHash> seen{center};
    std::vector<Word> frontier{center};
    while (!frontier.empty()) {
      std::vector<Word> next;
      for (const auto& x : frontier)
        for (const auto& e : nu.support()) {
          Word y = g.multiply(x, e.z);
          if (region.contains(y) && seen.insert(y).second) next.push_back(std::move(y));
        }
      frontier = std::move(next);
    }
    for (const auto& y : region.elements()) {
      if (region.distance(y) > check_radius) break;
      if (!seen.count(y))
        throw NotGenerating("support of '" + nu.label() + "' does not reach " + g.format(y) +
                            " from " + g.format(center));
    }
  }

  std::vector<Word> targets{center};
  for (auto& y : g.neighbors(center)) targets.push_back(std::move(y));

  struct Mass {
    double p = 0.0;
    Q q;
  };
  std::unordered_map<Word, Mass, WordHash> current{{center, {1.0, Q{1, 1}}}};
  std::unordered_map<Word, Mass, WordHash> cumulative;
  bool exact = nu.exact();
  for (int l = 1; l <= l_cap; ++l) {
    std::unordered_map<Word, Mass, WordHash> next;
    for (const auto& [x, m] : current)
      for (const auto& e : nu.support()) {
        auto& slot = next[g.multiply(x, e.z)];
        slot.p += m.p * e.p;
        if (exact) {
          slot.q = slot.q + m.q * to_q(*e.exact);
          if (!slot.q.ok) exact = false;
        }
      }
    current = std::move(next);
    for (const auto& [x, m] : current) {
      auto& slot = cumulative[x];
      slot.p += m.p;
      if (exact) slot.q = slot.q + m.q;
      if (exact && !slot.q.ok) exact = false;
    }
    double c0 = 1e300;
    Q c0q{1, 1};
    bool first = true;
    for (const auto& y : targets) {
      auto it = cumulative.find(y);
      double v = it == cumulative.end() ? 0.0 : it->second.p;
      if (v < c0) c0 = v;
      if (exact) {
        Q qv = it == cumulative.end() ? Q{0, 1} : it->second.q;
        if (first || qv < c0q) c0q = qv;
      }
      first = false;
    }
    if (c0 > 0.0) {
      report.l = l;
      report.c0 = c0;
      if (exact) report.c0_exact = Rational{static_cast<std::int64_t>(c0q.n), static_cast<std::int64_t>(c0q.d)};
      report.pass = true;
      return report;
    }
  }
  report.l = l_cap;
  report.pass = false;
  report.diagnosis = "some neighbour is not reached within " + std::to_string(l_cap) + " steps";
  return report;
}

Word step(const Group& g, const StepDistribution& nu, const Word& x, RngStream& rng) {
  const std::size_t i = nu.pick(rng.uniform());
  if (auto l = nu.single_letter_[i]) return g.multiply(x, *l);
  return g.multiply(x, nu.entries_[i].z);
}

std::string StopRule::str() const {
  std::string out;
  if (steps) out = "steps=" + std::to_string(*steps);
  if (exit_radius) out += std::string(out.empty() ? "" : ",") + "exit=" + std::to_string(*exit_radius);
  return out.empty() ? "none" : out;
}

ExitTest::ExitTest(const Group& g, std::optional<int> radius) : radius_(radius) {
  if (radius_ && !g.geodesic_normal_form() && *radius_ > 0) ball_ = ball(g, *radius_ - 1);
}

nlohmann::ordered_json Trajectory::to_json(const Group& g) const {
  nlohmann::ordered_json j;
  j["seed"] = seed;
  j["stream"] = stream;
  if (conditioned) {
    j["theta"] = *conditioned;
    j["depth"] = conditioned_depth;
    j["renorm_defect"] = renorm_defect;
  }
  auto& pos = j["positions"] = nlohmann::ordered_json::array();
  for (const auto& x : positions) pos.push_back(g.format(x));
  return j;
}

Trajectory simulate(const Group& g, const StepDistribution& nu, const Word& z, const StopRule& stop,
                    RngStream& rng) {
  return simulate(g, nu, z, stop, ExitTest(g, stop.exit_radius), rng);
}

Trajectory simulate(const Group& g, const StepDistribution& nu, const Word& z, const StopRule& stop,
                    const ExitTest& exit, RngStream& rng) {
  if (!stop.steps && !stop.exit_radius) throw InvalidArgument("stop rule needs steps or an exit radius");
  Trajectory t;
  t.start = z;
  t.seed = rng.master();
  t.stream = rng.stream();
  walk_streaming(
      z, stop, exit, [&](const Word& x) { return step(g, nu, x, rng); },
      [&](const Word& x, std::int64_t) { t.positions.push_back(x); });
  return t;
}

Word exit_proxy(const Group& g, const Trajectory& t, int radius, const Word& o) {
  for (const auto& x : t.positions) {
    if (o.empty() && g.geodesic_normal_form()) {
      if (static_cast<int>(x.size()) >= radius) return x;
    } else if (radius <= 0 || !distance(g, o, x, radius - 1)) {
      return x;
    }
  }
  throw NeverExited("trajectory of " + std::to_string(t.steps()) + " steps stays inside radius " +
                    std::to_string(radius));
}

std::optional<std::int64_t> stopping_time_Tm(const Group& g, const Trajectory& t, const TabulatedFunction& u,
                                             double m, int m1) {
  for (std::size_t n = 0; n < t.positions.size(); ++n) {
    Ball around = ball(g, m1, t.positions[n]);
    for (const auto& y : around.elements())
      if (std::abs(u(y)) > m) return static_cast<std::int64_t>(n);
  }
  return std::nullopt;
}

}  // namespace fatou
