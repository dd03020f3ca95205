#pragma once

#include <cstddef>
#include <vector>

namespace cmjsim {

// Fenwick tree over double weights, used for weighted parent sampling in
// large trees. Positions are 0-based externally.
class FenwickTree {
 public:
  explicit FenwickTree(std::size_t capacity) : n_(capacity), bit_(capacity + 1, 0.0) {
    top_ = 1;
    while ((top_ << 1) <= n_) top_ <<= 1;
  }

  void add(std::size_t idx, double delta) {
    for (std::size_t i = idx + 1; i <= n_; i += i & (~i + 1)) bit_[i] += delta;
  }

  double prefix(std::size_t idx) const {  // inclusive
    double s = 0.0;
    for (std::size_t i = idx + 1; i > 0; i -= i & (~i + 1)) s += bit_[i];
    return s;
  }

  // Smallest 0-based index whose inclusive prefix sum exceeds x; callers
  // guarantee x < total weight.
  std::size_t upper_bound(double x) const {
    std::size_t idx = 0;
    double acc = 0.0;
    for (std::size_t mask = top_; mask > 0; mask >>= 1) {
      std::size_t next = idx + mask;
      if (next <= n_ && acc + bit_[next] <= x) {
        idx = next;
        acc += bit_[next];
      }
    }
    return idx;
  }

 private:
  std::size_t n_;
  std::vector<double> bit_;
  std::size_t top_;
};

}  // namespace cmjsim
