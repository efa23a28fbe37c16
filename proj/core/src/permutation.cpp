#include "ata/permutation.hpp"

#include <numeric>
#include <stdexcept>
#include <string>

namespace ata {

bool is_bijection(std::span<const std::size_t> map) {
  std::vector<bool> seen(map.size(), false);
  for (auto v : map) {
    if (v >= map.size() || seen[v]) return false;
    seen[v] = true;
  }
  return true;
}

Permutation Permutation::identity(std::size_t n) {
  std::vector<std::size_t> map(n);
  std::iota(map.begin(), map.end(), std::size_t{0});
  return Permutation(std::move(map));
}

Permutation Permutation::from_map(std::vector<std::size_t> map) {
  if (!is_bijection(map))
    throw std::invalid_argument("map of length " + std::to_string(map.size()) + " is not a bijection");
  return Permutation(std::move(map));
}

Permutation Permutation::inverse() const {
  std::vector<std::size_t> inv(map_.size());
  for (std::size_t j = 0; j < map_.size(); ++j) inv[map_[j]] = j;
  return Permutation(std::move(inv));
}

bool Permutation::is_identity() const {
  for (std::size_t j = 0; j < map_.size(); ++j)
    if (map_[j] != j) return false;
  return true;
}

Permutation compose(const Permutation& first, const Permutation& second) {
  if (first.size() != second.size()) throw std::invalid_argument("compose: size mismatch");
  std::vector<std::size_t> map(first.size());
  for (std::size_t j = 0; j < map.size(); ++j) map[j] = first[second[j]];
  return Permutation::from_map(std::move(map));
}

}  // namespace ata
