#pragma once

#include <cmath>
#include <string>

#include "fatou/group.hpp"

namespace testing_support {

/// Converts an "aAbB" oracle string to a Free(k) word (upper case = inverse).
inline fatou::Word from_oracle(const fatou::Group& g, const std::string& s) {
  std::vector<fatou::Letter> raw;
  for (char c : s) {
    int index = std::tolower(c) - 'a';
    if (index >= 4) --index;  // default names skip 'e'
    raw.push_back(fatou::generator_letter(index, std::isupper(static_cast<unsigned char>(c)) != 0));
  }
  return g.normalize(raw);
}

inline std::string to_oracle(const fatou::Word& w) {
  std::string out;
  for (auto l : w.letters()) {
    int index = fatou::generator_index(l);
    char c = static_cast<char>('a' + index + (index >= 4 ? 1 : 0));
    out.push_back(fatou::is_inverted(l) ? static_cast<char>(std::toupper(c)) : c);
  }
  return out;
}

/// Binomial standard error of an empirical frequency with true value p.
inline double binomial_sigma(double p, double n) { return std::sqrt(p * (1.0 - p) / n); }

}  // namespace testing_support
