#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>
#include <string>

#include "erirbm/image.hpp"
#include "erirbm/matrix.hpp"

namespace erirbm {

// Tiles the rows of an H x (w*h) matrix as w x h grayscale cells with
// 1-pixel separators. Each cell is min-max normalized on its own; constant
// rows map to mid-gray.
inline Image tile_filters(const Mat& filters, int w, int h, int grid_cols) {
  if (filters.cols != std::size_t(w) * h)
    throw std::invalid_argument("tile_filters: row length does not match w*h");
  if (grid_cols < 1) throw std::invalid_argument("tile_filters: need at least one grid column");
  const int n = int(filters.rows);
  const int grid_rows = (n + grid_cols - 1) / grid_cols;
  Image canvas(grid_cols * w + (grid_cols - 1), grid_rows * h + (grid_rows - 1), 0.0);
  for (int f = 0; f < n; ++f) {
    const auto row = filters.row(std::size_t(f));
    const auto [mn_it, mx_it] = std::minmax_element(row.begin(), row.end());
    const double mn = *mn_it;
    const double range = *mx_it - mn;
    const int cx = (f % grid_cols) * (w + 1);
    const int cy = (f / grid_cols) * (h + 1);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double v = row[std::size_t(y) * w + x];
        canvas.at(cx + x, cy + y) = range > 0.0 ? (v - mn) / range : 0.5;
      }
    }
  }
  return canvas;
}

// Binary PGM (P5), pixel values clamped to [0,1] and scaled to 0..255.
inline void write_pgm(const Image& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out << "P5\n" << img.width << ' ' << img.height << "\n255\n";
  for (double p : img.pixels) {
    const unsigned char byte =
        static_cast<unsigned char>(std::lround(std::clamp(p, 0.0, 1.0) * 255.0));
    out.put(char(byte));
  }
  if (!out) throw std::runtime_error(path + ": write failed");
}

}  // namespace erirbm
