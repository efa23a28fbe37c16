#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>

namespace ata {

/// Read-only row-major [rows x cols] view.
struct MatrixView {
  std::span<const double> data;
  std::size_t rows = 0;
  std::size_t cols = 0;

  MatrixView() = default;
  MatrixView(std::span<const double> d, std::size_t r, std::size_t c) : data(d), rows(r), cols(c) {
    if (d.size() != r * c) throw std::invalid_argument("MatrixView: data length does not match rows*cols");
  }

  std::span<const double> row(std::size_t i) const { return data.subspan(i * cols, cols); }
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
};

}  // namespace ata
