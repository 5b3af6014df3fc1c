#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <unordered_map>
#include <vector>

#include "fatou/group.hpp"
#include "fatou/metric.hpp"

namespace fatou {

/// A real function known on a domain around e: an explicit table, or an
/// evaluator that reports points outside its domain as empty.
class TabulatedFunction {
 public:
  using Eval = std::function<std::optional<double>(const Word&)>;

  TabulatedFunction() = default;
  TabulatedFunction(Eval eval, std::optional<int> radius, std::string label)
      : eval_(std::move(eval)), radius_(radius), label_(std::move(label)) {}

  static TabulatedFunction constant(double value, std::string label = "");
  static TabulatedFunction from_table(std::unordered_map<Word, double, WordHash> table,
                                      std::optional<int> radius, std::string label);
  static TabulatedFunction from_ball(const Ball& ball, const std::vector<double>& values,
                                     std::string label);
  /// fn restricted to B(e, radius); the group must outlive the result.
  static TabulatedFunction from_function(const Group& g, int radius,
                                         std::function<double(const Word&)> fn, std::string label);
  /// a f + b h on the intersection of the domains.
  static TabulatedFunction combine(double a, const TabulatedFunction& f, double b,
                                   const TabulatedFunction& h, std::string label);

  std::optional<double> at(const Word& x) const { return eval_ ? eval_(x) : std::nullopt; }
  /// Throws OutOfTabulatedRange outside the domain.
  double operator()(const Word& x) const;

  const std::string& label() const { return label_; }
  /// Radius of the domain ball around e; empty means unrestricted.
  std::optional<int> radius() const { return radius_; }

  /// CSV "word,value" over the given points.
  void write_csv(std::ostream& out, const Group& g, const std::vector<Word>& points) const;

 private:
  Eval eval_;
  std::optional<int> radius_;
  std::string label_;
};

}  // namespace fatou
