#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "erirbm/baselines.hpp"
#include "erirbm/eri.hpp"
#include "erirbm/rbm.hpp"

namespace erirbm {

enum class ModelKind : std::uint8_t {
  plain = 'p',
  eri = 'e',
  drbm = 'd',
  orbm = 'o',
};

inline const char* to_string(ModelKind k) {
  switch (k) {
    case ModelKind::plain: return "rbm";
    case ModelKind::eri: return "eri";
    case ModelKind::drbm: return "drbm";
    case ModelKind::orbm: return "orbm";
  }
  return "?";
}

// On-disk model container. Layout, all little-endian:
//   magic "ERIRBM01" (8 bytes)
//   kind (1 byte): 'p' plain | 'e' eri | 'd' drbm | 'o' orbm
//   H, V, S, w, h (uint32 each)
//   angles: S doubles, degrees
//   payload: c[V], then for s = 1..S: b_s[H] then W_s[H*V] row-major
// plain and orbm store S = 1.
struct ModelFile {
  ModelKind kind = ModelKind::plain;
  std::uint32_t hidden = 0;
  std::uint32_t visible = 0;
  std::uint32_t bins = 0;
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<double> angles;
  std::vector<double> c;
  std::vector<std::vector<double>> b;
  std::vector<Mat> W;
};

inline constexpr char kModelMagic[8] = {'E', 'R', 'I', 'R', 'B', 'M', '0', '1'};

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(std::uint8_t(v >> (8 * i)));
}

inline void put_f64(std::vector<std::uint8_t>& out, double v) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(std::uint8_t(bits >> (8 * i)));
}

struct ByteReader {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;
  const std::string& name;

  void need(std::size_t n, const char* what) const {
    if (pos + n > bytes.size())
      throw std::runtime_error(name + ": truncated model file, expected " + std::to_string(n) +
                               " bytes for " + what + " at offset " + std::to_string(pos) +
                               ", got " + std::to_string(bytes.size() - pos));
  }

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(bytes[pos + std::size_t(i)]) << (8 * i);
    pos += 4;
    return v;
  }

  double f64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(bytes[pos + std::size_t(i)]) << (8 * i);
    pos += 8;
    return std::bit_cast<double>(v);
  }
};

}  // namespace detail

inline void validate_model_file(const ModelFile& mf) {
  if (std::size_t(mf.visible) != std::size_t(mf.width) * mf.height)
    throw std::invalid_argument("model file: V must equal w*h");
  if (mf.bins == 0) throw std::invalid_argument("model file: S must be at least 1");
  if ((mf.kind == ModelKind::plain || mf.kind == ModelKind::orbm) && mf.bins != 1)
    throw std::invalid_argument("model file: plain and orbm kinds require S=1");
  if (mf.angles.size() != mf.bins || mf.b.size() != mf.bins || mf.W.size() != mf.bins)
    throw std::invalid_argument("model file: per-matrix list sizes must equal S");
  if (mf.c.size() != mf.visible) throw std::invalid_argument("model file: visible bias size");
  for (std::uint32_t s = 0; s < mf.bins; ++s) {
    if (mf.b[s].size() != mf.hidden) throw std::invalid_argument("model file: hidden bias size");
    if (mf.W[s].rows != mf.hidden || mf.W[s].cols != mf.visible)
      throw std::invalid_argument("model file: weight matrix shape");
  }
}

inline std::vector<std::uint8_t> encode_model(const ModelFile& mf) {
  validate_model_file(mf);
  std::vector<std::uint8_t> out;
  out.reserve(29 + 8 * (mf.angles.size() + mf.c.size() +
                        std::size_t(mf.bins) * (mf.hidden + std::size_t(mf.hidden) * mf.visible)));
  out.insert(out.end(), std::begin(kModelMagic), std::end(kModelMagic));
  out.push_back(std::uint8_t(mf.kind));
  detail::put_u32(out, mf.hidden);
  detail::put_u32(out, mf.visible);
  detail::put_u32(out, mf.bins);
  detail::put_u32(out, mf.width);
  detail::put_u32(out, mf.height);
  for (double a : mf.angles) detail::put_f64(out, a);
  for (double v : mf.c) detail::put_f64(out, v);
  for (std::uint32_t s = 0; s < mf.bins; ++s) {
    for (double v : mf.b[s]) detail::put_f64(out, v);
    for (double v : mf.W[s].data) detail::put_f64(out, v);
  }
  return out;
}

inline ModelFile decode_model(std::span<const std::uint8_t> bytes, const std::string& name) {
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kModelMagic, 8) != 0)
    throw std::runtime_error(name + ": bad magic, not a model file");
  detail::ByteReader r{bytes, 8, name};
  r.need(1, "kind");
  const std::uint8_t kind_byte = bytes[r.pos++];
  ModelFile mf;
  switch (kind_byte) {
    case 'p': mf.kind = ModelKind::plain; break;
    case 'e': mf.kind = ModelKind::eri; break;
    case 'd': mf.kind = ModelKind::drbm; break;
    case 'o': mf.kind = ModelKind::orbm; break;
    default:
      throw std::runtime_error(name + ": unknown model kind byte " + std::to_string(kind_byte));
  }
  mf.hidden = r.u32("H");
  mf.visible = r.u32("V");
  mf.bins = r.u32("S");
  mf.width = r.u32("w");
  mf.height = r.u32("h");

  const std::size_t expected =
      29 + 8 * (std::size_t(mf.bins) + std::size_t(mf.visible) +
                std::size_t(mf.bins) * (std::size_t(mf.hidden) +
                                        std::size_t(mf.hidden) * mf.visible));
  if (bytes.size() != expected)
    throw std::runtime_error(name + ": truncated or oversized model file, expected " +
                             std::to_string(expected) + " bytes, got " +
                             std::to_string(bytes.size()));

  mf.angles.reserve(mf.bins);
  for (std::uint32_t s = 0; s < mf.bins; ++s) mf.angles.push_back(r.f64("angle"));
  mf.c.reserve(mf.visible);
  for (std::uint32_t j = 0; j < mf.visible; ++j) mf.c.push_back(r.f64("visible bias"));
  mf.b.reserve(mf.bins);
  mf.W.reserve(mf.bins);
  for (std::uint32_t s = 0; s < mf.bins; ++s) {
    std::vector<double> bs;
    bs.reserve(mf.hidden);
    for (std::uint32_t k = 0; k < mf.hidden; ++k) bs.push_back(r.f64("hidden bias"));
    mf.b.push_back(std::move(bs));
    Mat W(mf.hidden, mf.visible);
    for (auto& x : W.data) x = r.f64("weight");
    mf.W.push_back(std::move(W));
  }
  validate_model_file(mf);
  return mf;
}

inline void save_model(const ModelFile& mf, const std::string& path) {
  const std::vector<std::uint8_t> bytes = encode_model(mf);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error(path + ": cannot open for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), std::streamsize(bytes.size()));
  if (!out) throw std::runtime_error(path + ": write failed");
}

inline ModelFile load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error(path + ": cannot open");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_model(bytes, path);
}

inline ModelFile to_model_file(const RbmModel& m, ModelKind kind = ModelKind::plain) {
  if (kind != ModelKind::plain && kind != ModelKind::orbm)
    throw std::invalid_argument("to_model_file: single-matrix model needs plain or orbm kind");
  ModelFile mf;
  mf.kind = kind;
  mf.hidden = std::uint32_t(m.hidden_count());
  mf.visible = std::uint32_t(m.visible_count());
  mf.bins = 1;
  mf.width = std::uint32_t(m.filter_width);
  mf.height = std::uint32_t(m.filter_height);
  mf.angles = {0.0};
  mf.c = m.c;
  mf.b = {m.b};
  mf.W = {m.W};
  return mf;
}

inline ModelFile to_model_file(const EriModel& m) {
  ModelFile mf;
  mf.kind = ModelKind::eri;
  mf.hidden = std::uint32_t(m.hidden_count());
  mf.visible = std::uint32_t(m.visible_count());
  mf.bins = std::uint32_t(m.bin_count());
  mf.width = std::uint32_t(m.filter_width);
  mf.height = std::uint32_t(m.filter_height);
  mf.angles = m.angles.angles();
  mf.c = m.c;
  mf.b = m.b;
  mf.W = m.W;
  return mf;
}

// The drbm layout keeps one visible bias slot; member 1's bias is stored.
// Feature extraction never reads the visible bias, so routing is unaffected.
inline ModelFile to_model_file(const DrbmModel& m) {
  ModelFile mf;
  mf.kind = ModelKind::drbm;
  mf.hidden = std::uint32_t(m.hidden_count());
  mf.visible = std::uint32_t(m.visible_count());
  mf.bins = std::uint32_t(m.bin_count());
  mf.width = std::uint32_t(m.members.empty() ? 0 : m.members[0].filter_width);
  mf.height = std::uint32_t(m.members.empty() ? 0 : m.members[0].filter_height);
  mf.angles = m.angles.angles();
  mf.c = m.members.empty() ? std::vector<double>{} : m.members[0].c;
  for (const RbmModel& member : m.members) {
    mf.b.push_back(member.b);
    mf.W.push_back(member.W);
  }
  return mf;
}

inline RbmModel rbm_from(const ModelFile& mf) {
  if (mf.bins != 1) throw std::invalid_argument("rbm_from: model file holds more than one matrix");
  RbmModel m;
  m.W = mf.W[0];
  m.b = mf.b[0];
  m.c = mf.c;
  m.filter_width = int(mf.width);
  m.filter_height = int(mf.height);
  return m;
}

inline EriModel eri_from(const ModelFile& mf) {
  EriModel m;
  m.W = mf.W;
  m.b = mf.b;
  m.c = mf.c;
  m.angles = AngleSet(int(mf.bins));
  m.filter_width = int(mf.width);
  m.filter_height = int(mf.height);
  return m;
}

inline DrbmModel drbm_from(const ModelFile& mf) {
  DrbmModel m;
  m.angles = AngleSet(int(mf.bins));
  for (std::uint32_t s = 0; s < mf.bins; ++s) {
    RbmModel member;
    member.W = mf.W[s];
    member.b = mf.b[s];
    member.c = mf.c;
    member.filter_width = int(mf.width);
    member.filter_height = int(mf.height);
    m.members.push_back(std::move(member));
  }
  return m;
}

}  // namespace erirbm
