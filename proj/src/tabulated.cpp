#include "fatou/tabulated.hpp"

#include <iomanip>

#include "fatou/error.hpp"

namespace fatou {

TabulatedFunction TabulatedFunction::constant(double value, std::string label) {
  if (label.empty()) label = "constant(" + std::to_string(value) + ")";
  return TabulatedFunction([value](const Word&) -> std::optional<double> { return value; },
                           std::nullopt, std::move(label));
}

TabulatedFunction TabulatedFunction::from_table(std::unordered_map<Word, double, WordHash> table,
                                                std::optional<int> radius, std::string label) {
  auto shared = std::make_shared<const std::unordered_map<Word, double, WordHash>>(std::move(table));
  return TabulatedFunction(
      [shared](const Word& x) -> std::optional<double> {
        auto it = shared->find(x);
        if (it == shared->end()) return std::nullopt;
        return it->second;
      },
      radius, std::move(label));
}

TabulatedFunction TabulatedFunction::from_ball(const Ball& ball, const std::vector<double>& values,
                                               std::string label) {
  if (values.size() != ball.size()) throw InvalidArgument("one value per ball element expected");
  std::unordered_map<Word, double, WordHash> table;
  table.reserve(ball.size());
  for (std::size_t i = 0; i < ball.size(); ++i) table.emplace(ball[i], values[i]);
  std::optional<int> radius;
  if (ball.center().empty()) radius = ball.radius();
  return from_table(std::move(table), radius, std::move(label));
}

TabulatedFunction TabulatedFunction::from_function(const Group& g, int radius,
                                                   std::function<double(const Word&)> fn,
                                                   std::string label) {
  const Group* gp = &g;
  return TabulatedFunction(
      [gp, radius, fn = std::move(fn)](const Word& x) -> std::optional<double> {
        const int len = gp->geodesic_normal_form() ? static_cast<int>(x.size()) : gp->word_length(x);
        if (len > radius) return std::nullopt;
        return fn(x);
      },
      radius, std::move(label));
}

TabulatedFunction TabulatedFunction::combine(double a, const TabulatedFunction& f, double b,
                                             const TabulatedFunction& h, std::string label) {
  std::optional<int> radius = f.radius_;
  if (h.radius_) radius = radius ? std::min(*radius, *h.radius_) : h.radius_;
  return TabulatedFunction(
      [a, b, f, h](const Word& x) -> std::optional<double> {
        auto u = f.at(x);
        auto v = h.at(x);
        if (!u || !v) return std::nullopt;
        return a * *u + b * *v;
      },
      radius, std::move(label));
}

double TabulatedFunction::operator()(const Word& x) const {
  auto v = at(x);
  if (!v) throw OutOfTabulatedRange("'" + label_ + "' is not tabulated at a word of length " +
                                    std::to_string(x.size()));
  return *v;
}

void TabulatedFunction::write_csv(std::ostream& out, const Group& g,
                                  const std::vector<Word>& points) const {
  out << "word,value\n" << std::setprecision(17);
  for (const auto& x : points) {
    out << g.format(x) << ',';
    if (auto v = at(x)) out << *v;
    out << '\n';
  }
}

}  // namespace fatou
