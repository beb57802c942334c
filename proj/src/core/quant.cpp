#include "core/quant.hpp"

#include <cmath>
#include <cstring>
#include <string>

#include "core/error.hpp"

namespace quafl::quant {

namespace {
constexpr uint8_t kCodecGrid = 0;

void check_dim(const Vec& v, int dim, const char* what) {
  if (static_cast<int>(v.size()) != dim)
    fail(Errc::invalid_argument,
         std::string(what) + " has dimension " + std::to_string(v.size()) + ", expected " +
             std::to_string(dim));
}
}  // namespace

GridSpec make_grid(int bits, double spacing, int dim) {
  if (bits < 1 || bits > 32)
    fail(Errc::invalid_argument, "bits must be in [1, 32], got " + std::to_string(bits));
  if (!(spacing > 0.0) || !std::isfinite(spacing))
    fail(Errc::invalid_argument, "spacing must be positive and finite");
  if (dim < 1) fail(Errc::invalid_argument, "dim must be >= 1, got " + std::to_string(dim));
  GridSpec g;
  g.bits = bits;
  g.spacing = spacing;
  g.window = std::ldexp(spacing, bits);  // 2^bits * spacing, exact
  g.dim = dim;
  return g;
}

TheoremParams theorem_params(long long T, int n, int d, int K, double sigma, double G, double L,
                             double f0_gap) {
  if (T < 1) fail(Errc::invalid_argument, "T must be >= 1");
  if (n < 1 || d < 1 || K < 1) fail(Errc::invalid_argument, "n, d, K must be >= 1");
  if (!(L > 0.0)) fail(Errc::invalid_argument, "L must be positive");
  if (sigma < 0.0 || G < 0.0 || f0_gap < 0.0)
    fail(Errc::invalid_argument, "sigma, G, f0_gap must be nonnegative");
  TheoremParams p;
  const double Td = static_cast<double>(T);
  p.eta = static_cast<double>(n + 1) / std::sqrt(Td);
  p.R = 2.0 + std::pow(Td, 3.0 / static_cast<double>(d));
  const double amp = p.R * p.R + 7.0;
  if (!std::isfinite(amp)) fail(Errc::invalid_argument, "R overflows for this (T, d)");
  p.gamma = p.eta / amp * std::sqrt(sigma * sigma + 2.0 * K * G * G + f0_gap / L);
  p.gamma_q = amp * p.gamma / std::sqrt(static_cast<double>(d));
  return p;
}

Codec Codec::grid(const GridSpec& g) {
  // Re-validate so a hand-built GridSpec cannot bypass the invariants.
  Codec c;
  c.grid_ = make_grid(g.bits, g.spacing, g.dim);
  c.dim_ = g.dim;
  return c;
}

Codec Codec::lossless(int dim) {
  if (dim < 1) fail(Errc::invalid_argument, "dim must be >= 1");
  Codec c;
  c.lossless_ = true;
  c.dim_ = dim;
  return c;
}

const GridSpec& Codec::grid_spec() const {
  if (lossless_) fail(Errc::internal, "lossless codec has no grid");
  return grid_;
}

double Codec::error_bound_l2() const {
  if (lossless_) return 0.0;
  return grid_.spacing * std::sqrt(static_cast<double>(dim_));
}

Encoded Codec::encode(const Vec& x, Rng& rng) const {
  check_dim(x, dim_, "encode input");
  for (double v : x)
    if (!std::isfinite(v)) fail(Errc::invalid_argument, "encode input has a non-finite coordinate");

  Encoded msg;
  if (lossless_) {
    msg.lossless = true;
    msg.hat = x;
    msg.wire_bits = 32LL * dim_ + kHeaderBits;
    return msg;
  }

  msg.residues.resize(x.size());
  msg.hat.resize(x.size());
  const double inv = 1.0 / grid_.spacing;
  const int64_t wrap = int64_t{1} << grid_.bits;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double u = x[i] * inv;
    if (std::fabs(u) >= 0x1.0p62)
      fail(Errc::invalid_argument, "coordinate magnitude too large for this grid");
    double lo = std::floor(u);
    int64_t k = static_cast<int64_t>(lo);
    const double frac = u - lo;
    if (rng.uniform01() < frac) ++k;
    msg.hat[i] = static_cast<double>(k) * grid_.spacing;
    msg.residues[i] = static_cast<uint32_t>(((k % wrap) + wrap) % wrap);
  }
  msg.wire_bits = static_cast<long long>(grid_.bits) * dim_ + kHeaderBits;
  return msg;
}

Vec Codec::decode(const Vec& key, const Encoded& msg) const {
  check_dim(key, dim_, "decode key");
  if (lossless_) return msg.hat;  // key is ignored by construction
  if (static_cast<int>(msg.residues.size()) != dim_)
    fail(Errc::invalid_argument, "message dimension does not match codec");

  Vec out(key.size());
  const int64_t wrap = int64_t{1} << grid_.bits;
  for (std::size_t i = 0; i < key.size(); ++i) {
    const int64_t r = msg.residues[i];
    // Unique m with (m*wrap + r)*spacing in [key - W/2, key + W/2).
    const double z = (key[i] - static_cast<double>(r) * grid_.spacing) / grid_.window - 0.5;
    const int64_t m = static_cast<int64_t>(std::ceil(z));
    const int64_t k = m * wrap + r;
    // Same integer-times-spacing product the encoder used, so an in-window
    // decode reproduces hat bit-exactly.
    out[i] = static_cast<double>(k) * grid_.spacing;
  }
  return out;
}

Codec::DecodeResult Codec::decode_with_oracle(const Vec& key, const Encoded& msg,
                                              const Vec& truth) const {
  check_dim(truth, dim_, "oracle truth");
  DecodeResult res;
  res.value = decode(key, msg);
  if (lossless_) return res;  // never fails by definition
  for (std::size_t i = 0; i < res.value.size(); ++i) {
    if (res.value[i] != truth[i]) {
      res.failed = true;
      break;
    }
  }
  return res;
}

long long bits_accounting(const Encoded& msg) { return msg.wire_bits; }

std::vector<uint8_t> serialize(const GridSpec& g, const Encoded& msg) {
  if (msg.lossless) fail(Errc::invalid_argument, "lossless messages have no wire form");
  if (static_cast<int>(msg.residues.size()) != g.dim)
    fail(Errc::invalid_argument, "message dimension does not match grid");

  const std::size_t payload_bits = static_cast<std::size_t>(g.dim) * g.bits;
  std::vector<uint8_t> out(kHeaderBytes + (payload_bits + 7) / 8, 0);

  const uint32_t d32 = static_cast<uint32_t>(g.dim);
  out[0] = static_cast<uint8_t>(d32);
  out[1] = static_cast<uint8_t>(d32 >> 8);
  out[2] = static_cast<uint8_t>(d32 >> 16);
  out[3] = static_cast<uint8_t>(d32 >> 24);
  out[4] = static_cast<uint8_t>(g.bits);
  uint64_t spacing_bits;
  std::memcpy(&spacing_bits, &g.spacing, sizeof spacing_bits);
  for (int i = 0; i < 8; ++i) out[5 + i] = static_cast<uint8_t>(spacing_bits >> (8 * i));
  out[13] = kCodecGrid;
  // out[14], out[15] reserved, zero

  std::size_t bitpos = 0;
  for (int i = 0; i < g.dim; ++i) {
    const uint64_t v = msg.residues[static_cast<std::size_t>(i)];
    for (int b = 0; b < g.bits; ++b, ++bitpos) {
      if ((v >> b) & 1u) out[kHeaderBytes + bitpos / 8] |= static_cast<uint8_t>(1u << (bitpos % 8));
    }
  }
  return out;
}

Parsed parse(const std::vector<uint8_t>& bytes) {
  if (bytes.size() < kHeaderBytes) fail(Errc::parse, "message shorter than header");
  const uint32_t d32 = static_cast<uint32_t>(bytes[0]) | (static_cast<uint32_t>(bytes[1]) << 8) |
                       (static_cast<uint32_t>(bytes[2]) << 16) |
                       (static_cast<uint32_t>(bytes[3]) << 24);
  const int bits = bytes[4];
  uint64_t spacing_bits = 0;
  for (int i = 0; i < 8; ++i) spacing_bits |= static_cast<uint64_t>(bytes[5 + i]) << (8 * i);
  double spacing;
  std::memcpy(&spacing, &spacing_bits, sizeof spacing);
  if (bytes[13] != kCodecGrid) fail(Errc::parse, "unknown codec id");

  Parsed p;
  p.grid = make_grid(bits, spacing, static_cast<int>(d32));
  const std::size_t payload_bits = static_cast<std::size_t>(p.grid.dim) * p.grid.bits;
  if (bytes.size() != kHeaderBytes + (payload_bits + 7) / 8)
    fail(Errc::parse, "message length does not match header");

  p.msg.residues.resize(d32);
  std::size_t bitpos = 0;
  for (uint32_t i = 0; i < d32; ++i) {
    uint64_t v = 0;
    for (int b = 0; b < bits; ++b, ++bitpos) {
      if ((bytes[kHeaderBytes + bitpos / 8] >> (bitpos % 8)) & 1u) v |= uint64_t{1} << b;
    }
    p.msg.residues[i] = static_cast<uint32_t>(v);
  }
  p.msg.wire_bits = static_cast<long long>(bits) * p.grid.dim + kHeaderBits;
  return p;
}

}  // namespace quafl::quant
