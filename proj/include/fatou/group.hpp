#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fatou/word.hpp"

namespace fatou {

enum class GroupKind { Free, FreeProductCyclic, SmallCancellation, Lattice };

/// Declarative description of a finitely presented group backend.
struct GroupSpec {
  GroupKind kind = GroupKind::Free;
  int rank = 2;                             // Free rank, Lattice dimension
  std::vector<int> orders;                  // FreeProductCyclic factor orders
  std::vector<std::string> generator_names; // empty: a, b, c, ...
  std::vector<std::string> relators;        // SmallCancellation, e.g. "a b a' b'"

  static GroupSpec free(int rank);
  static GroupSpec free_product_cyclic(std::vector<int> orders);
  static GroupSpec lattice(int dimension);
  static GroupSpec small_cancellation(std::vector<std::string> generators,
                                      std::vector<std::string> relators);

  /// Compact textual form, e.g. "free:2", "fpc:2,2,2", "lattice:2",
  /// "sc:a,b,c,d:a b a' b' c d c' d'".
  std::string str() const;
  static GroupSpec parse(std::string_view text);
};

/// A group backend with a solvable word problem. Immutable after
/// construction and safe to share between threads.
class Group {
 public:
  explicit Group(GroupSpec spec);

  const GroupSpec& spec() const { return spec_; }
  GroupKind kind() const { return spec_.kind; }
  int generator_count() const { return static_cast<int>(names_.size()); }

  /// The symmetric generating set Z in increasing letter order.
  const std::vector<Letter>& generating_set() const { return generating_set_; }

  /// Lattice(d >= 2).
  bool non_hyperbolic() const;
  bool is_lattice() const { return spec_.kind == GroupKind::Lattice; }
  /// The Cayley graph is a tree and normal forms spell the unique geodesic
  /// from the identity, so prefixes of a normal form are normal forms.
  bool is_tree() const { return tree_; }
  /// The length of a normal form equals the word metric length.
  bool geodesic_normal_form() const { return spec_.kind != GroupKind::SmallCancellation; }

  Letter inverse(Letter l) const;
  Word inverse(const Word& w) const;

  Word normalize(std::span<const Letter> raw) const;
  Word multiply(const Word& x, const Word& y) const;
  Word multiply(const Word& x, Letter z) const;
  /// x^{-1} y
  Word quotient(const Word& x, const Word& y) const;

  /// {normalize(x z) : z in Z}, deduplicated, in increasing shortlex order.
  std::vector<Word> neighbors(const Word& x) const;

  /// d(e, w). Exact; for SmallCancellation this searches the Cayley graph.
  int word_length(const Word& w) const;

  /// Dehn's algorithm (SmallCancellation) or normal form test elsewhere.
  bool is_identity(std::span<const Letter> raw) const;

  std::string letter_name(Letter l) const;
  /// Space separated symbols with primed inverses; "e" for the identity.
  std::string format(const Word& w) const;
  /// Parses symbols with optional whitespace, e.g. "a b a'" or "aba'".
  std::vector<Letter> parse_letters(std::string_view text) const;
  Word parse(std::string_view text) const { return normalize(parse_letters(text)); }

 private:
  void free_reduce(std::vector<Letter>& w) const;
  Word normalize_free(std::span<const Letter> raw) const;
  Word normalize_fpc(std::span<const Letter> raw) const;
  Word normalize_lattice(std::span<const Letter> raw) const;
  Word normalize_small_cancellation(std::span<const Letter> raw) const;
  bool dehn_step(std::vector<Letter>& w, bool allow_half_swaps) const;
  void check_small_cancellation() const;

  GroupSpec spec_;
  std::vector<std::string> names_;
  std::vector<Letter> generating_set_;
  bool tree_ = false;
  // Cyclic conjugates of every relator and its inverse (SmallCancellation).
  std::vector<std::vector<Letter>> conjugates_;
};

}  // namespace fatou
