#pragma once

#include <unordered_map>
#include <vector>

#include "fatou/group.hpp"

namespace fatou {

/// Orbits of B(o, R) in a tree Cayley graph under the automorphisms that
/// fix a prefix-closed set of marked words (the hull) pointwise. A class is
/// either a hull vertex h or the pair (h, k): words leaving the hull at h
/// and going k >= 1 steps further from o. A law p0 delta_e + q 1_Z commutes
/// with these automorphisms, so harmonic-type problems whose data are
/// invariant reduce to a chain on classes.
class TreeLumping {
 public:
  TreeLumping(const Group& g, const std::vector<Word>& marks, int max_depth);

  struct Move {
    int target;  // -1: beyond max_depth
    double weight;
  };

  std::size_t class_count() const { return depth_.size(); }
  std::size_t hull_size() const { return hull_.size(); }
  int depth(std::size_t c) const { return depth_[c]; }
  /// The shortlex-least word of the class.
  const Word& representative(std::size_t c) const { return rep_[c]; }
  /// -1 when |x| > max_depth.
  int class_of(const Word& x) const;
  std::vector<Move> moves(std::size_t c, double hold, double q) const;

 private:
  const Group* g_;
  int max_depth_;
  int degree_;
  std::vector<Word> hull_;
  std::unordered_map<Word, int, WordHash> hull_index_;
  std::vector<int> off_degree_;  // neighbours of a hull vertex outside the hull
  std::vector<int> off_base_;    // class id of (h, 1), or -1
  std::vector<int> depth_;
  std::vector<Word> rep_;
  std::vector<int> owner_;  // hull vertex of an off-hull class
};

}  // namespace fatou
