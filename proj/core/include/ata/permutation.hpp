#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace ata {

/// Bijection on {0..n-1} stored as a gather map: `aligned[j] = original[map[j]]`.
class Permutation {
 public:
  Permutation() = default;

  static Permutation identity(std::size_t n);
  /// Throws std::invalid_argument unless `map` is a bijection.
  static Permutation from_map(std::vector<std::size_t> map);

  std::size_t size() const { return map_.size(); }
  std::size_t operator[](std::size_t j) const { return map_[j]; }
  std::span<const std::size_t> map() const { return map_; }

  Permutation inverse() const;
  bool is_identity() const;

  friend bool operator==(const Permutation&, const Permutation&) = default;
  friend auto operator<=>(const Permutation&, const Permutation&) = default;

 private:
  explicit Permutation(std::vector<std::size_t> map) : map_(std::move(map)) {}
  std::vector<std::size_t> map_;
};

bool is_bijection(std::span<const std::size_t> map);

/// Gather by `first`, then by `second`: result[j] = first[second[j]].
Permutation compose(const Permutation& first, const Permutation& second);

/// out[j] = rows[map[j]] for row-major rows of width `cols`.
template <typename T>
std::vector<T> gather_rows(std::span<const T> rows, std::size_t cols, const Permutation& p) {
  std::vector<T> out(rows.size());
  for (std::size_t j = 0; j < p.size(); ++j) {
    const T* src = rows.data() + p[j] * cols;
    std::copy(src, src + cols, out.data() + j * cols);
  }
  return out;
}

}  // namespace ata
