#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fatou {

/// A generator letter. Code 2*i is generator i, 2*i+1 its formal inverse.
using Letter = std::uint8_t;

constexpr Letter generator_letter(int index, bool inverted = false) {
  return static_cast<Letter>(2 * index + (inverted ? 1 : 0));
}
constexpr int generator_index(Letter l) { return l >> 1; }
constexpr bool is_inverted(Letter l) { return (l & 1) != 0; }
constexpr Letter formal_inverse(Letter l) { return static_cast<Letter>(l ^ 1); }

/// A group element in the canonical normal form of its backend. Words are
/// only meaningful together with the Group that produced them.
class Word {
 public:
  Word() = default;
  explicit Word(std::vector<Letter> letters) : letters_(std::move(letters)) {}

  const std::vector<Letter>& letters() const { return letters_; }
  std::span<const Letter> span() const { return letters_; }
  std::size_t size() const { return letters_.size(); }
  bool empty() const { return letters_.empty(); }
  Letter operator[](std::size_t i) const { return letters_[i]; }
  Letter back() const { return letters_.back(); }

  Word prefix(std::size_t n) const {
    n = std::min(n, letters_.size());
    return Word(std::vector<Letter>(letters_.begin(), letters_.begin() + static_cast<std::ptrdiff_t>(n)));
  }

  /// Length of the longest common prefix.
  std::size_t common_prefix(const Word& other) const {
    auto [a, b] = std::mismatch(letters_.begin(), letters_.end(), other.letters_.begin(),
                                other.letters_.end());
    return static_cast<std::size_t>(a - letters_.begin());
  }

  bool starts_with(const Word& p) const { return common_prefix(p) == p.size(); }

  friend bool operator==(const Word&, const Word&) = default;

  /// Shortlex order: shorter words first, then lexicographic by letter code.
  friend std::strong_ordering operator<=>(const Word& a, const Word& b) {
    if (a.size() != b.size()) return a.size() <=> b.size();
    return a.letters_ <=> b.letters_;
  }

 private:
  friend class Group;
  std::vector<Letter> letters_;
};

struct WordHash {
  std::size_t operator()(const Word& w) const noexcept {
    std::uint64_t h = 1469598103934665603ull;
    for (Letter l : w.letters()) {
      h ^= l + 1u;
      h *= 1099511628211ull;
    }
    return static_cast<std::size_t>(h ^ (h >> 29));
  }
};

}  // namespace fatou
