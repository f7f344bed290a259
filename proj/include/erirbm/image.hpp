#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "erirbm/matrix.hpp"

namespace erirbm {

// Grayscale raster, row-major, origin top-left, y increasing downward.
struct Image {
  int width = 0;
  int height = 0;
  std::vector<double> pixels;

  Image() = default;
  Image(int w, int h, double fill = 0.0) {
    if (w < 1 || h < 1) throw std::invalid_argument("Image: dimensions must be at least 1x1");
    width = w;
    height = h;
    pixels.assign(static_cast<std::size_t>(w) * h, fill);
  }

  double& at(int x, int y) { return pixels[static_cast<std::size_t>(y) * width + x]; }
  double at(int x, int y) const { return pixels[static_cast<std::size_t>(y) * width + x]; }
  std::size_t size() const { return pixels.size(); }
};

inline double degrees_to_radians(double deg) { return deg * std::numbers::pi / 180.0; }

// Wraps an angle into [0, 360).
inline double normalize_degrees(double deg) {
  double a = std::fmod(deg, 360.0);
  if (a < 0.0) a += 360.0;
  if (a >= 360.0) a -= 360.0;
  return a;
}

// Precomputed inverse map for rotating a w x h raster about its geometric
// center ((w-1)/2, (h-1)/2). Positive angles are counterclockwise in the
// raster coordinate frame; with y pointing down that reads as clockwise on
// screen. Samples outside the canvas are zero. Quarter turns whose mapped
// coordinates land exactly on the pixel grid become index permutations
// instead of bilinear lookups.
struct RotationMap {
  int width = 0;
  int height = 0;
  bool exact = false;
  std::vector<std::int32_t> source;  // exact path: source index per pixel, -1 = outside

  struct Taps {
    std::int32_t index[4];
    double weight[4];
    int count;
  };
  std::vector<Taps> taps;  // bilinear path
};

inline RotationMap make_rotation_map(int w, int h, double theta_deg) {
  if (w < 1 || h < 1) throw std::invalid_argument("make_rotation_map: bad raster dims");
  RotationMap map;
  map.width = w;
  map.height = h;
  const double theta = normalize_degrees(theta_deg);

  int quarter = -1;
  for (int q = 0; q < 4; ++q) {
    if (std::abs(theta - 90.0 * q) < 1e-9) {
      quarter = q;
      break;
    }
  }
  // 90/270 land on the grid only when w and h have the same parity
  if (quarter >= 0 && (quarter % 2 == 0 || (w - h) % 2 == 0)) {
    map.exact = true;
    map.source.resize(static_cast<std::size_t>(w) * h);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        // doubled coordinates keep the center arithmetic integral
        const int dx2 = 2 * x - (w - 1);
        const int dy2 = 2 * y - (h - 1);
        int xs2, ys2;
        switch (quarter) {
          case 0: xs2 = (w - 1) + dx2; ys2 = (h - 1) + dy2; break;
          case 1: xs2 = (w - 1) + dy2; ys2 = (h - 1) - dx2; break;
          case 2: xs2 = (w - 1) - dx2; ys2 = (h - 1) - dy2; break;
          default: xs2 = (w - 1) - dy2; ys2 = (h - 1) + dx2; break;
        }
        const int xs = xs2 / 2;
        const int ys = ys2 / 2;
        const bool inside = xs >= 0 && xs < w && ys >= 0 && ys < h;
        map.source[static_cast<std::size_t>(y) * w + x] = inside ? ys * w + xs : -1;
      }
    }
    return map;
  }

  map.taps.resize(static_cast<std::size_t>(w) * h);
  const double rad = degrees_to_radians(theta);
  const double cth = std::cos(rad);
  const double sth = std::sin(rad);
  const double cx = 0.5 * (w - 1);
  const double cy = 0.5 * (h - 1);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = x - cx;
      const double dy = y - cy;
      const double xs = cx + cth * dx + sth * dy;
      const double ys = cy - sth * dx + cth * dy;
      auto& t = map.taps[static_cast<std::size_t>(y) * w + x];
      t.count = 0;
      const int x0 = static_cast<int>(std::floor(xs));
      const int y0 = static_cast<int>(std::floor(ys));
      const double fx = xs - x0;
      const double fy = ys - y0;
      const double wts[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy, fx * fy};
      const int xo[4] = {x0, x0 + 1, x0, x0 + 1};
      const int yo[4] = {y0, y0, y0 + 1, y0 + 1};
      for (int i = 0; i < 4; ++i) {
        if (wts[i] == 0.0 || xo[i] < 0 || xo[i] >= w || yo[i] < 0 || yo[i] >= h) continue;
        t.index[t.count] = yo[i] * w + xo[i];
        t.weight[t.count] = wts[i];
        ++t.count;
      }
    }
  }
  return map;
}

inline void apply_rotation_map(const RotationMap& map, std::span<const double> src,
                               std::span<double> dst) {
  const std::size_t n = static_cast<std::size_t>(map.width) * map.height;
  if (src.size() != n || dst.size() != n)
    throw std::invalid_argument("apply_rotation_map: raster size mismatch");
  if (map.exact) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::int32_t s = map.source[i];
      dst[i] = s >= 0 ? src[static_cast<std::size_t>(s)] : 0.0;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const auto& t = map.taps[i];
      double acc = 0.0;
      for (int j = 0; j < t.count; ++j) acc += t.weight[j] * src[static_cast<std::size_t>(t.index[j])];
      dst[i] = acc;
    }
  }
}

// dst += scale * rotated(src)
inline void accumulate_rotation_map(const RotationMap& map, std::span<const double> src,
                                    std::span<double> dst, double scale) {
  const std::size_t n = static_cast<std::size_t>(map.width) * map.height;
  if (src.size() != n || dst.size() != n)
    throw std::invalid_argument("accumulate_rotation_map: raster size mismatch");
  if (map.exact) {
    for (std::size_t i = 0; i < n; ++i) {
      const std::int32_t s = map.source[i];
      if (s >= 0) dst[i] += scale * src[static_cast<std::size_t>(s)];
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      const auto& t = map.taps[i];
      double acc = 0.0;
      for (int j = 0; j < t.count; ++j) acc += t.weight[j] * src[static_cast<std::size_t>(t.index[j])];
      dst[i] += scale * acc;
    }
  }
}

// Rotation keeps the canvas fixed at w x h; content falling outside is
// cropped, uncovered pixels are zero.
inline Image rotate(const Image& img, double theta_deg) {
  const RotationMap map = make_rotation_map(img.width, img.height, theta_deg);
  Image out(img.width, img.height);
  apply_rotation_map(map, img.pixels, out.pixels);
  return out;
}

struct Gradients {
  Image gx;
  Image gy;
};

// 3x3 Sobel derivatives, borders handled by edge replication. gx responds to
// horizontal intensity change, gy to vertical (y down).
inline Gradients sobel(const Image& img) {
  if (img.width < 3 || img.height < 3)
    throw std::invalid_argument("sobel: image must be at least 3x3");
  Gradients g{Image(img.width, img.height), Image(img.width, img.height)};
  auto pix = [&](int x, int y) {
    x = std::clamp(x, 0, img.width - 1);
    y = std::clamp(y, 0, img.height - 1);
    return img.at(x, y);
  };
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double p00 = pix(x - 1, y - 1), p10 = pix(x, y - 1), p20 = pix(x + 1, y - 1);
      const double p01 = pix(x - 1, y), p21 = pix(x + 1, y);
      const double p02 = pix(x - 1, y + 1), p12 = pix(x, y + 1), p22 = pix(x + 1, y + 1);
      g.gx.at(x, y) = (p20 + 2.0 * p21 + p22) - (p00 + 2.0 * p01 + p02);
      g.gy.at(x, y) = (p02 + 2.0 * p12 + p22) - (p00 + 2.0 * p10 + p20);
    }
  }
  return g;
}

// Unnormalized isotropic Gaussian centered on the raster, peak value 1 at
// ((w-1)/2, (h-1)/2).
inline Image gaussian_window(int w, int h, double sigma) {
  if (sigma <= 0.0) throw std::invalid_argument("gaussian_window: sigma must be positive");
  Image out(w, h);
  const double cx = 0.5 * (w - 1);
  const double cy = 0.5 * (h - 1);
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = x - cx;
      const double dy = y - cy;
      out.at(x, y) = std::exp(-(dx * dx + dy * dy) * inv);
    }
  }
  return out;
}

// Rotates every row of an H x (w*h) matrix as a w x h raster, preserving row
// order.
inline Mat rotate_filter_rows(const Mat& grad, double theta_deg, int w, int h) {
  if (grad.cols != static_cast<std::size_t>(w) * h)
    throw std::invalid_argument("rotate_filter_rows: row length does not match w*h");
  const RotationMap map = make_rotation_map(w, h, theta_deg);
  Mat out(grad.rows, grad.cols);
  for (std::size_t r = 0; r < grad.rows; ++r) apply_rotation_map(map, grad.row(r), out.row(r));
  return out;
}

}  // namespace erirbm
