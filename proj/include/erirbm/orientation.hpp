#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "erirbm/image.hpp"

namespace erirbm {

// S evenly spaced reference angles, phi_s = (s-1) * 360/S for s = 1..S.
struct AngleSet {
  int bins = 1;

  AngleSet() = default;
  explicit AngleSet(int s) : bins(s) {
    if (s < 1) throw std::invalid_argument("AngleSet: need at least one bin");
  }

  double bin_width_deg() const { return 360.0 / bins; }
  double angle_deg(int s) const { return (s - 1) * 360.0 / bins; }
  double bin_center_deg(int s) const { return angle_deg(s) + 0.5 * bin_width_deg(); }

  std::vector<double> angles() const {
    std::vector<double> a(static_cast<std::size_t>(bins));
    for (int s = 1; s <= bins; ++s) a[std::size_t(s - 1)] = angle_deg(s);
    return a;
  }
};

// Bin j (1-based) covers [phi_j, phi_j + 360/S).
struct OrientationHistogram {
  std::vector<double> weights;

  double total() const {
    double t = 0.0;
    for (double w : weights) t += w;
    return t;
  }
};

// Gaussian-weighted histogram of gradient orientations. Per pixel the Sobel
// gradient angle (atan2, full [0,360) range) selects one bin and the entry is
// magnitude times the window value, sigma = min(w,h)/5.
inline OrientationHistogram gradient_histogram(const Image& img, const AngleSet& aset) {
  const Gradients g = sobel(img);
  const Image win = gaussian_window(img.width, img.height, std::min(img.width, img.height) / 5.0);
  OrientationHistogram hist{std::vector<double>(static_cast<std::size_t>(aset.bins), 0.0)};
  const double width = aset.bin_width_deg();
  for (std::size_t i = 0; i < img.size(); ++i) {
    const double gx = g.gx.pixels[i];
    const double gy = g.gy.pixels[i];
    const double mag = std::hypot(gx, gy);
    if (mag == 0.0) continue;
    double angle = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
    if (angle < 0.0) angle += 360.0;
    int bin = static_cast<int>(angle / width);
    if (bin >= aset.bins) bin -= aset.bins;  // wrap fp roundoff at 360
    hist.weights[std::size_t(bin)] += mag * win.pixels[i];
  }
  return hist;
}

struct OrientationEstimate {
  int index = 1;        // s in 1..S
  double psi_deg = 0.0; // center of the winning bin
  bool degenerate = false;
};

inline OrientationEstimate dominant_orientation(const OrientationHistogram& hist,
                                                const AngleSet& aset) {
  if (hist.weights.size() != static_cast<std::size_t>(aset.bins))
    throw std::invalid_argument("dominant_orientation: histogram size does not match angle set");
  int best = 0;
  bool any = false;
  for (int j = 0; j < aset.bins; ++j) {
    const double w = hist.weights[std::size_t(j)];
    if (w > 0.0) any = true;
    if (w > hist.weights[std::size_t(best)]) best = j;  // ties keep the lowest index
  }
  if (!any) return {1, 0.0, true};
  return {best + 1, aset.bin_center_deg(best + 1), false};
}

inline OrientationEstimate dominant_orientation(const Image& img, const AngleSet& aset) {
  return dominant_orientation(gradient_histogram(img, aset), aset);
}

}  // namespace erirbm
