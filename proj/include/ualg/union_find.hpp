#pragma once

#include <numeric>
#include <vector>

namespace ualg {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0u); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  // Returns false if already joined. The smaller root survives.
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    if (b < a) std::swap(a, b);
    parent_[b] = a;
    return true;
  }

  std::vector<int> labels() {
    std::vector<int> out(parent_.size());
    for (std::size_t i = 0; i < parent_.size(); ++i) out[i] = static_cast<int>(find(i));
    return out;
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace ualg
