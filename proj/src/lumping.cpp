#include "fatou/lumping.hpp"

#include <algorithm>
#include <optional>
#include <unordered_set>

#include "fatou/error.hpp"

namespace fatou {

TreeLumping::TreeLumping(const Group& g, const std::vector<Word>& marks, int max_depth)
    : g_(&g), max_depth_(max_depth), degree_(static_cast<int>(g.generating_set().size())) {
  if (!g.is_tree()) throw InvalidArgument("lumping needs a tree backend");
  std::unordered_set<Word, WordHash> hull{Word{}};
  for (const auto& m : marks) {
    const std::size_t top = std::min<std::size_t>(m.size(), static_cast<std::size_t>(std::max(max_depth, 0)));
    for (std::size_t n = 1; n <= top; ++n) hull.insert(m.prefix(n));
  }
  hull_.assign(hull.begin(), hull.end());
  std::sort(hull_.begin(), hull_.end());
  for (std::size_t i = 0; i < hull_.size(); ++i) {
    hull_index_.emplace(hull_[i], static_cast<int>(i));
    depth_.push_back(static_cast<int>(hull_[i].size()));
    rep_.push_back(hull_[i]);
    owner_.push_back(static_cast<int>(i));
  }
  off_degree_.assign(hull_.size(), 0);
  off_base_.assign(hull_.size(), -1);
  for (std::size_t i = 0; i < hull_.size(); ++i) {
    const Word& h = hull_[i];
    std::optional<Word> first;
    for (auto& w : g.neighbors(h)) {
      if (w.size() != h.size() + 1 || hull_index_.count(w)) continue;
      ++off_degree_[i];
      if (!first) first = std::move(w);
    }
    if (!first || static_cast<int>(h.size()) >= max_depth) continue;
    off_base_[i] = static_cast<int>(depth_.size());
    Word cur = *first;
    for (int d = static_cast<int>(h.size()) + 1; d <= max_depth; ++d) {
      depth_.push_back(d);
      rep_.push_back(cur);
      owner_.push_back(static_cast<int>(i));
      if (d == max_depth) break;
      for (auto& w : g.neighbors(cur))
        if (w.size() == cur.size() + 1) {
          cur = std::move(w);
          break;
        }
    }
  }
}

int TreeLumping::class_of(const Word& x) const {
  if (static_cast<int>(x.size()) > max_depth_) return -1;
  std::vector<Letter> buf;
  int h = 0;  // e is always in the hull
  for (std::size_t j = 0; j < x.size(); ++j) {
    buf.push_back(x[j]);
    auto it = hull_index_.find(Word(buf));
    if (it == hull_index_.end()) {
      const int k = static_cast<int>(x.size() - j);
      return off_base_[static_cast<std::size_t>(h)] + k - 1;
    }
    h = it->second;
  }
  return h;
}

std::vector<TreeLumping::Move> TreeLumping::moves(std::size_t c, double hold, double q) const {
  std::vector<Move> out;
  if (hold > 0.0) out.push_back({static_cast<int>(c), hold});
  if (c < hull_.size()) {
    for (const auto& w : g_->neighbors(hull_[c])) {
      auto it = hull_index_.find(w);
      if (it != hull_index_.end()) out.push_back({it->second, q});
    }
    if (off_degree_[c] > 0) out.push_back({off_base_[c], off_degree_[c] * q});
    return out;
  }
  const int h = owner_[c];
  const int k = depth_[c] - depth_[static_cast<std::size_t>(h)];
  out.push_back({k == 1 ? h : static_cast<int>(c) - 1, q});
  out.push_back({depth_[c] < max_depth_ ? static_cast<int>(c) + 1 : -1, (degree_ - 1) * q});
  return out;
}

}  // namespace fatou
