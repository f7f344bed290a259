#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "erirbm/image.hpp"

namespace erirbm {

// Ordered collection of images with class labels. `orientation` is empty
// until the dataset has been annotated with dominant-orientation indices
// (values 1..S).
struct Dataset {
  std::vector<Image> images;
  std::vector<int> labels;
  std::vector<int> orientation;

  std::size_t size() const { return images.size(); }
  bool annotated() const { return !images.empty() && orientation.size() == images.size(); }
};

namespace detail {

inline std::uint32_t read_be32(std::ifstream& in, const std::string& path, std::size_t offset) {
  unsigned char buf[4];
  if (!in.read(reinterpret_cast<char*>(buf), 4))
    throw std::runtime_error(path + ": truncated file, expected 4 bytes at offset " +
                             std::to_string(offset));
  return (std::uint32_t(buf[0]) << 24) | (std::uint32_t(buf[1]) << 16) |
         (std::uint32_t(buf[2]) << 8) | std::uint32_t(buf[3]);
}

}  // namespace detail

// Standard MNIST IDX container: big-endian headers, magic 2051 for image
// files and 2049 for label files. Pixel bytes are scaled to [0,1].
inline Dataset load_idx(const std::string& images_path, const std::string& labels_path) {
  std::ifstream imgs(images_path, std::ios::binary);
  if (!imgs) throw std::runtime_error(images_path + ": cannot open");
  std::ifstream labs(labels_path, std::ios::binary);
  if (!labs) throw std::runtime_error(labels_path + ": cannot open");

  const std::uint32_t img_magic = detail::read_be32(imgs, images_path, 0);
  if (img_magic != 2051)
    throw std::runtime_error(images_path + ": bad magic " + std::to_string(img_magic) +
                             " at offset 0 (expected 2051)");
  const std::uint32_t img_count = detail::read_be32(imgs, images_path, 4);
  const std::uint32_t rows = detail::read_be32(imgs, images_path, 8);
  const std::uint32_t cols = detail::read_be32(imgs, images_path, 12);
  if (rows == 0 || cols == 0)
    throw std::runtime_error(images_path + ": zero image dimensions in header");

  const std::uint32_t lab_magic = detail::read_be32(labs, labels_path, 0);
  if (lab_magic != 2049)
    throw std::runtime_error(labels_path + ": bad magic " + std::to_string(lab_magic) +
                             " at offset 0 (expected 2049)");
  const std::uint32_t lab_count = detail::read_be32(labs, labels_path, 4);

  if (img_count != lab_count)
    throw std::runtime_error("count mismatch: " + images_path + " has " +
                             std::to_string(img_count) + " images, " + labels_path + " has " +
                             std::to_string(lab_count) + " labels");

  const std::size_t pixel_bytes = std::size_t(img_count) * rows * cols;
  std::vector<unsigned char> pixels(pixel_bytes);
  imgs.read(reinterpret_cast<char*>(pixels.data()), std::streamsize(pixel_bytes));
  if (std::size_t(imgs.gcount()) != pixel_bytes)
    throw std::runtime_error(images_path + ": truncated file, expected " +
                             std::to_string(pixel_bytes) + " pixel bytes at offset 16, got " +
                             std::to_string(imgs.gcount()));

  std::vector<unsigned char> labels(img_count);
  labs.read(reinterpret_cast<char*>(labels.data()), std::streamsize(labels.size()));
  if (std::size_t(labs.gcount()) != labels.size())
    throw std::runtime_error(labels_path + ": truncated file, expected " +
                             std::to_string(labels.size()) + " label bytes at offset 8, got " +
                             std::to_string(labs.gcount()));

  Dataset d;
  d.images.reserve(img_count);
  d.labels.reserve(img_count);
  const int w = int(cols);
  const int h = int(rows);
  for (std::uint32_t i = 0; i < img_count; ++i) {
    Image img(w, h);
    const unsigned char* src = pixels.data() + std::size_t(i) * rows * cols;
    for (std::size_t p = 0; p < std::size_t(rows) * cols; ++p) img.pixels[p] = src[p] / 255.0;
    d.images.push_back(std::move(img));
    if (labels[i] > 9)
      throw std::runtime_error(labels_path + ": label " + std::to_string(int(labels[i])) +
                               " out of range 0..9 at index " + std::to_string(i));
    d.labels.push_back(int(labels[i]));
  }
  return d;
}

// MNIST-rot text container: 785 whitespace-separated decimals per row, 784
// pixels in [0,1] then the label. The distributed files store pixels
// transposed relative to IDX row-major order, so `transposed` defaults on.
inline Dataset load_amat(const std::string& path, bool transposed = true) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error(path + ": cannot open");
  Dataset d;
  std::string line;
  std::size_t row = 0;
  std::vector<double> values;
  values.reserve(785);
  while (std::getline(in, line)) {
    ++row;
    values.clear();
    const char* p = line.c_str();
    while (true) {
      while (*p == ' ' || *p == '\t' || *p == '\r') ++p;
      if (*p == '\0') break;
      char* end = nullptr;
      const double v = std::strtod(p, &end);
      if (end == p)
        throw std::runtime_error(path + ": unparseable token at row " + std::to_string(row));
      p = end;
      values.push_back(v);
    }
    if (values.size() != 785)
      throw std::runtime_error(path + ": row " + std::to_string(row) + " has " +
                               std::to_string(values.size()) + " fields (expected 785)");
    const double raw_label = values[784];
    const double rounded = std::round(raw_label);
    if (std::abs(raw_label - rounded) > 1e-9 || rounded < 0.0 || rounded > 9.0)
      throw std::runtime_error(path + ": row " + std::to_string(row) + " label " +
                               std::to_string(raw_label) + " out of range 0..9");
    Image img(28, 28);
    for (int i = 0; i < 784; ++i) {
      const double v = values[std::size_t(i)];
      if (v < -1e-9 || v > 1.0 + 1e-9)
        throw std::runtime_error(path + ": row " + std::to_string(row) + " pixel " +
                                 std::to_string(i) + " outside [0,1]");
      const double pv = std::clamp(v, 0.0, 1.0);
      if (transposed)
        img.pixels[std::size_t(i % 28) * 28 + std::size_t(i / 28)] = pv;
      else
        img.pixels[std::size_t(i)] = pv;
    }
    d.images.push_back(std::move(img));
    d.labels.push_back(int(rounded));
  }
  return d;
}

// Strict threshold: pixels become 1 when strictly above tau, else 0. Any
// cached orientation is dropped because the pixels changed.
inline Dataset binarize(const Dataset& d, double tau) {
  if (tau < 0.0 || tau >= 1.0) throw std::invalid_argument("binarize: tau must be in [0, 1)");
  Dataset out;
  out.labels = d.labels;
  out.images.reserve(d.size());
  for (const Image& img : d.images) {
    Image b(img.width, img.height);
    for (std::size_t i = 0; i < img.size(); ++i) b.pixels[i] = img.pixels[i] > tau ? 1.0 : 0.0;
    out.images.push_back(std::move(b));
  }
  return out;
}

// Rotates every image by an independent uniform angle in [0, 360) degrees.
// Deterministic for a given seed; labels preserved.
inline Dataset rotgen(const Dataset& d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> angle(0.0, 360.0);
  Dataset out;
  out.labels = d.labels;
  out.images.reserve(d.size());
  for (const Image& img : d.images) out.images.push_back(rotate(img, angle(rng)));
  return out;
}

inline Dataset slice(const Dataset& d, std::size_t first, std::size_t count) {
  if (first + count > d.size()) throw std::out_of_range("slice: range exceeds dataset size");
  Dataset out;
  out.images.assign(d.images.begin() + long(first), d.images.begin() + long(first + count));
  out.labels.assign(d.labels.begin() + long(first), d.labels.begin() + long(first + count));
  if (d.annotated())
    out.orientation.assign(d.orientation.begin() + long(first),
                           d.orientation.begin() + long(first + count));
  return out;
}

inline bool is_binary(const Dataset& d) {
  for (const Image& img : d.images)
    for (double p : img.pixels)
      if (p != 0.0 && p != 1.0) return false;
  return true;
}

}  // namespace erirbm
