#include "fatou/group.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <deque>
#include <unordered_set>

#include "fatou/error.hpp"

namespace fatou {

namespace {

std::vector<std::string> split(std::string_view text, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = text.find(sep, start);
    out.emplace_back(text.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

int parse_int(std::string_view s) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw InvalidPresentation("expected an integer, got '" + std::string(s) + "'");
  return value;
}

std::vector<std::string> default_names(int count) {
  std::vector<std::string> names;
  for (int i = 0; i < count; ++i) {
    char c = static_cast<char>('a' + i);
    // 'e' denotes the identity
    if (c >= 'e') ++c;
    if (c > 'z') throw InvalidPresentation("too many generators for default names");
    names.emplace_back(1, c);
  }
  return names;
}

}  // namespace

GroupSpec GroupSpec::free(int rank) {
  GroupSpec s;
  s.kind = GroupKind::Free;
  s.rank = rank;
  return s;
}

GroupSpec GroupSpec::free_product_cyclic(std::vector<int> orders) {
  GroupSpec s;
  s.kind = GroupKind::FreeProductCyclic;
  s.rank = static_cast<int>(orders.size());
  s.orders = std::move(orders);
  return s;
}

GroupSpec GroupSpec::lattice(int dimension) {
  GroupSpec s;
  s.kind = GroupKind::Lattice;
  s.rank = dimension;
  return s;
}

GroupSpec GroupSpec::small_cancellation(std::vector<std::string> generators,
                                        std::vector<std::string> relators) {
  GroupSpec s;
  s.kind = GroupKind::SmallCancellation;
  s.rank = static_cast<int>(generators.size());
  s.generator_names = std::move(generators);
  s.relators = std::move(relators);
  return s;
}

std::string GroupSpec::str() const {
  auto join = [](const auto& items, const char* sep) {
    std::string out;
    for (std::size_t i = 0; i < items.size(); ++i) {
      if (i) out += sep;
      if constexpr (std::is_same_v<std::decay_t<decltype(items[i])>, int>)
        out += std::to_string(items[i]);
      else
        out += items[i];
    }
    return out;
  };
  switch (kind) {
    case GroupKind::Free: return "free:" + std::to_string(rank);
    case GroupKind::FreeProductCyclic: return "fpc:" + join(orders, ",");
    case GroupKind::Lattice: return "lattice:" + std::to_string(rank);
    case GroupKind::SmallCancellation:
      return "sc:" + join(generator_names, ",") + ":" + join(relators, ";");
  }
  return {};
}

GroupSpec GroupSpec::parse(std::string_view text) {
  auto colon = text.find(':');
  if (colon == std::string_view::npos)
    throw InvalidPresentation("group spec must look like kind:parameters, got '" +
                              std::string(text) + "'");
  auto kind = text.substr(0, colon);
  auto rest = text.substr(colon + 1);
  if (kind == "free") return free(parse_int(rest));
  if (kind == "lattice") return lattice(parse_int(rest));
  if (kind == "fpc") {
    std::vector<int> orders;
    for (const auto& o : split(rest, ',')) orders.push_back(parse_int(o));
    return free_product_cyclic(std::move(orders));
  }
  if (kind == "sc") {
    auto second = rest.find(':');
    if (second == std::string_view::npos)
      throw InvalidPresentation("sc spec must be sc:generators:relators");
    return small_cancellation(split(rest.substr(0, second), ','),
                              split(rest.substr(second + 1), ';'));
  }
  throw InvalidPresentation("unknown group kind '" + std::string(kind) + "'");
}

Group::Group(GroupSpec spec) : spec_(std::move(spec)) {
  switch (spec_.kind) {
    case GroupKind::Free:
      if (spec_.rank < 2) throw InvalidPresentation("Free(k) requires k >= 2");
      break;
    case GroupKind::Lattice:
      if (spec_.rank < 1) throw InvalidPresentation("Lattice(d) requires d >= 1");
      break;
    case GroupKind::FreeProductCyclic:
      if (spec_.orders.size() < 2)
        throw InvalidPresentation("FreeProductCyclic needs at least two factors");
      for (int n : spec_.orders)
        if (n < 2) throw InvalidPresentation("cyclic factor orders must be >= 2");
      spec_.rank = static_cast<int>(spec_.orders.size());
      break;
    case GroupKind::SmallCancellation:
      if (spec_.generator_names.empty())
        throw InvalidPresentation("SmallCancellation needs generators");
      spec_.rank = static_cast<int>(spec_.generator_names.size());
      break;
  }
  if (spec_.rank > 100) throw InvalidPresentation("at most 100 generators are supported");

  names_ = spec_.generator_names.empty() ? default_names(spec_.rank) : spec_.generator_names;
  if (static_cast<int>(names_.size()) != spec_.rank)
    throw InvalidPresentation("generator name count does not match rank");
  for (std::size_t i = 0; i < names_.size(); ++i) {
    const auto& n = names_[i];
    if (n.empty() || n == "e" || n.find_first_of(" '") != std::string::npos)
      throw InvalidPresentation("invalid generator name '" + n + "'");
    for (std::size_t j = 0; j < i; ++j)
      if (names_[j] == n) throw InvalidPresentation("duplicate generator name '" + n + "'");
  }

  for (int i = 0; i < spec_.rank; ++i) {
    generating_set_.push_back(generator_letter(i));
    bool involution = spec_.kind == GroupKind::FreeProductCyclic && spec_.orders[i] == 2;
    if (!involution) generating_set_.push_back(generator_letter(i, true));
  }

  tree_ = spec_.kind == GroupKind::Free ||
          (spec_.kind == GroupKind::Lattice && spec_.rank == 1) ||
          (spec_.kind == GroupKind::FreeProductCyclic &&
           std::all_of(spec_.orders.begin(), spec_.orders.end(), [](int n) { return n == 2; }));

  if (spec_.kind == GroupKind::SmallCancellation) {
    if (spec_.relators.empty()) throw InvalidPresentation("SmallCancellation needs relators");
    for (const auto& text : spec_.relators) {
      auto r = parse_letters(text);
      auto reduced = r;
      free_reduce(reduced);
      if (reduced.size() != r.size() || r.empty() ||
          (r.size() > 1 && r.front() == formal_inverse(r.back())))
        throw InvalidPresentation("relator '" + text + "' is not cyclically reduced");
      std::vector<Letter> inv(r.rbegin(), r.rend());
      for (auto& l : inv) l = formal_inverse(l);
      for (const auto* base : {&r, &inv}) {
        for (std::size_t s = 0; s < base->size(); ++s) {
          std::vector<Letter> c(base->begin() + static_cast<std::ptrdiff_t>(s), base->end());
          c.insert(c.end(), base->begin(), base->begin() + static_cast<std::ptrdiff_t>(s));
          if (std::find(conjugates_.begin(), conjugates_.end(), c) == conjugates_.end())
            conjugates_.push_back(std::move(c));
        }
      }
    }
    check_small_cancellation();
  }
}

void Group::check_small_cancellation() const {
  // A piece is a common prefix of two distinct cyclic conjugates of
  // relators or their inverses; C'(1/6) demands |piece| < |r|/6.
  for (std::size_t i = 0; i < conjugates_.size(); ++i) {
    for (std::size_t j = i + 1; j < conjugates_.size(); ++j) {
      const auto& a = conjugates_[i];
      const auto& b = conjugates_[j];
      std::size_t k = 0;
      while (k < a.size() && k < b.size() && a[k] == b[k]) ++k;
      if (6 * k >= a.size() || 6 * k >= b.size())
        throw InvalidPresentation("presentation violates C'(1/6): piece of length " +
                                  std::to_string(k) + " in relators of length " +
                                  std::to_string(a.size()) + " and " + std::to_string(b.size()));
    }
  }
}

bool Group::non_hyperbolic() const { return spec_.kind == GroupKind::Lattice && spec_.rank >= 2; }

Letter Group::inverse(Letter l) const {
  if (spec_.kind == GroupKind::FreeProductCyclic && spec_.orders[generator_index(l)] == 2)
    return generator_letter(generator_index(l));
  return formal_inverse(l);
}

Word Group::inverse(const Word& w) const {
  std::vector<Letter> raw(w.letters().rbegin(), w.letters().rend());
  for (auto& l : raw) l = formal_inverse(l);
  return normalize(raw);
}

void Group::free_reduce(std::vector<Letter>& w) const {
  std::size_t top = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (top > 0 && w[top - 1] == formal_inverse(w[i]))
      --top;
    else
      w[top++] = w[i];
  }
  w.resize(top);
}

Word Group::normalize(std::span<const Letter> raw) const {
  for (Letter l : raw)
    if (generator_index(l) >= spec_.rank)
      throw UnknownGenerator("letter code " + std::to_string(l) + " outside generating set");
  switch (spec_.kind) {
    case GroupKind::Free: return normalize_free(raw);
    case GroupKind::FreeProductCyclic: return normalize_fpc(raw);
    case GroupKind::Lattice: return normalize_lattice(raw);
    case GroupKind::SmallCancellation: return normalize_small_cancellation(raw);
  }
  return {};
}

Word Group::normalize_free(std::span<const Letter> raw) const {
  std::vector<Letter> w(raw.begin(), raw.end());
  free_reduce(w);
  return Word(std::move(w));
}

Word Group::normalize_fpc(std::span<const Letter> raw) const {
  struct Syllable {
    int gen;
    int exp;
  };
  std::vector<Syllable> stack;
  for (Letter l : raw) {
    int g = generator_index(l);
    int n = spec_.orders[g];
    int delta = is_inverted(l) ? n - 1 : 1;
    if (!stack.empty() && stack.back().gen == g) {
      stack.back().exp = (stack.back().exp + delta) % n;
      if (stack.back().exp == 0) stack.pop_back();
    } else {
      stack.push_back({g, delta % n});
    }
  }
  // Spell each syllable x^e by its shortest form; ties go to positive powers.
  std::vector<Letter> w;
  for (auto [g, e] : stack) {
    int n = spec_.orders[g];
    if (2 * e <= n)
      w.insert(w.end(), static_cast<std::size_t>(e), generator_letter(g));
    else
      w.insert(w.end(), static_cast<std::size_t>(n - e), generator_letter(g, true));
  }
  return Word(std::move(w));
}

Word Group::normalize_lattice(std::span<const Letter> raw) const {
  std::vector<long> v(static_cast<std::size_t>(spec_.rank), 0);
  for (Letter l : raw) v[static_cast<std::size_t>(generator_index(l))] += is_inverted(l) ? -1 : 1;
  std::vector<Letter> w;
  for (int i = 0; i < spec_.rank; ++i) {
    long c = v[static_cast<std::size_t>(i)];
    w.insert(w.end(), static_cast<std::size_t>(c < 0 ? -c : c), generator_letter(i, c < 0));
  }
  return Word(std::move(w));
}

bool Group::dehn_step(std::vector<Letter>& w, bool allow_half_swaps) const {
  // Longest match of a relator-conjugate prefix anywhere in w.
  std::size_t best_len = 0, best_pos = 0;
  const std::vector<Letter>* best = nullptr;
  for (std::size_t pos = 0; pos < w.size(); ++pos) {
    for (const auto& c : conjugates_) {
      std::size_t k = 0;
      while (k < c.size() && pos + k < w.size() && w[pos + k] == c[k]) ++k;
      if (k > best_len) {
        best_len = k;
        best_pos = pos;
        best = &c;
      }
    }
  }
  if (best != nullptr && 2 * best_len > best->size()) {
    // w = ... u ..., u v a relator conjugate: u = v^{-1}, |v| < |u|.
    std::vector<Letter> replacement(best->rbegin(), best->rend() - static_cast<std::ptrdiff_t>(best_len));
    for (auto& l : replacement) l = formal_inverse(l);
    w.erase(w.begin() + static_cast<std::ptrdiff_t>(best_pos),
            w.begin() + static_cast<std::ptrdiff_t>(best_pos + best_len));
    w.insert(w.begin() + static_cast<std::ptrdiff_t>(best_pos), replacement.begin(), replacement.end());
    free_reduce(w);
    return true;
  }
  if (!allow_half_swaps) return false;
  // Exactly half a relator: swap for the other half when shortlex smaller.
  for (std::size_t pos = 0; pos < w.size(); ++pos) {
    for (const auto& c : conjugates_) {
      std::size_t half = c.size() / 2;
      if (c.size() % 2 != 0 || pos + half > w.size()) continue;
      if (!std::equal(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(half),
                      w.begin() + static_cast<std::ptrdiff_t>(pos)))
        continue;
      std::vector<Letter> replacement(c.rbegin(), c.rend() - static_cast<std::ptrdiff_t>(half));
      for (auto& l : replacement) l = formal_inverse(l);
      if (std::lexicographical_compare(replacement.begin(), replacement.end(),
                                       w.begin() + static_cast<std::ptrdiff_t>(pos),
                                       w.begin() + static_cast<std::ptrdiff_t>(pos + half))) {
        std::copy(replacement.begin(), replacement.end(), w.begin() + static_cast<std::ptrdiff_t>(pos));
        free_reduce(w);
        return true;
      }
    }
  }
  return false;
}

Word Group::normalize_small_cancellation(std::span<const Letter> raw) const {
  std::vector<Letter> w(raw.begin(), raw.end());
  free_reduce(w);
  // Every step shortens w or makes it shortlex smaller, so this terminates.
  while (dehn_step(w, true)) {
  }
  return Word(std::move(w));
}

bool Group::is_identity(std::span<const Letter> raw) const {
  if (spec_.kind != GroupKind::SmallCancellation) return normalize(raw).empty();
  std::vector<Letter> w(raw.begin(), raw.end());
  free_reduce(w);
  while (dehn_step(w, false)) {
  }
  return w.empty();
}

Word Group::multiply(const Word& x, const Word& y) const {
  if (spec_.kind == GroupKind::Free) {
    std::vector<Letter> w = x.letters();
    for (Letter l : y.letters()) {
      if (!w.empty() && w.back() == formal_inverse(l))
        w.pop_back();
      else
        w.push_back(l);
    }
    return Word(std::move(w));
  }
  std::vector<Letter> w = x.letters();
  w.insert(w.end(), y.letters().begin(), y.letters().end());
  return normalize(w);
}

Word Group::multiply(const Word& x, Letter z) const {
  if (spec_.kind == GroupKind::Free) {
    std::vector<Letter> w = x.letters();
    if (!w.empty() && w.back() == formal_inverse(z))
      w.pop_back();
    else
      w.push_back(z);
    return Word(std::move(w));
  }
  std::vector<Letter> w = x.letters();
  w.push_back(z);
  return normalize(w);
}

Word Group::quotient(const Word& x, const Word& y) const {
  std::vector<Letter> w(x.letters().rbegin(), x.letters().rend());
  for (auto& l : w) l = formal_inverse(l);
  w.insert(w.end(), y.letters().begin(), y.letters().end());
  return normalize(w);
}

std::vector<Word> Group::neighbors(const Word& x) const {
  std::vector<Word> out;
  out.reserve(generating_set_.size());
  for (Letter z : generating_set_) out.push_back(multiply(x, z));
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

int Group::word_length(const Word& w) const {
  if (geodesic_normal_form()) return static_cast<int>(w.size());
  if (w.empty()) return 0;
  // Breadth-first search from the identity; |w| bounds the answer.
  std::unordered_set<Word, WordHash> seen{Word{}};
  std::vector<Word> layer{Word{}};
  for (int d = 1; d <= static_cast<int>(w.size()); ++d) {
    std::vector<Word> next;
    for (const auto& x : layer)
      for (auto& y : neighbors(x))
        if (seen.insert(y).second) {
          if (y == w) return d;
          next.push_back(std::move(y));
        }
    layer = std::move(next);
  }
  return static_cast<int>(w.size());
}

std::string Group::letter_name(Letter l) const {
  std::string name = names_.at(static_cast<std::size_t>(generator_index(l)));
  if (is_inverted(l)) name += '\'';
  return name;
}

std::string Group::format(const Word& w) const {
  if (w.empty()) return "e";
  std::string out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) out += ' ';
    out += letter_name(w[i]);
  }
  return out;
}

std::vector<Letter> Group::parse_letters(std::string_view text) const {
  std::vector<Letter> out;
  std::size_t i = 0;
  auto skip_space = [&] {
    while (i < text.size() && std::isspace(static_cast<unsigned char>(text[i]))) ++i;
  };
  skip_space();
  if (text.substr(i) == "e") return out;
  while (i < text.size()) {
    std::size_t best = 0;
    int best_index = -1;
    for (std::size_t g = 0; g < names_.size(); ++g) {
      const auto& n = names_[g];
      if (n.size() > best && text.substr(i, n.size()) == n) {
        best = n.size();
        best_index = static_cast<int>(g);
      }
    }
    if (best_index < 0)
      throw UnknownGenerator("cannot parse '" + std::string(text.substr(i)) + "'");
    i += best;
    bool inverted = false;
    while (i < text.size() && text[i] == '\'') {
      inverted = !inverted;
      ++i;
    }
    out.push_back(generator_letter(best_index, inverted));
    skip_space();
  }
  return out;
}

}  // namespace fatou
