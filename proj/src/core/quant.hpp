#pragma once

#include <cstdint>
#include <vector>

#include "core/rng.hpp"
#include "core/vec.hpp"

namespace quafl::quant {

// Fixed wire header: u32 dim, u8 bits, f64 spacing, u8 codec id, 2 reserved bytes.
inline constexpr int kHeaderBits = 128;
inline constexpr int kHeaderBytes = kHeaderBits / 8;

// Per-coordinate quantization grid {k * spacing}. Residues are transmitted
// modulo 2^bits, so the decoder can reconstruct any grid point within a
// half-window of its key.
struct GridSpec {
  int bits = 0;        // residue width per coordinate, 1..32
  double spacing = 0;  // grid resolution per coordinate
  double window = 0;   // modular wrap length, 2^bits * spacing
  int dim = 0;
};

GridSpec make_grid(int bits, double spacing, int dim);

// Learning rate and quantization parameters for a horizon-T run:
//   eta = (n+1)/sqrt(T), R = 2 + T^(3/d),
//   gamma^2 = eta^2/(R^2+7)^2 * (sigma^2 + 2*K*G^2 + f0_gap/L),
// and the per-coordinate spacing gamma_q = (R^2+7)*gamma/sqrt(d), chosen so the
// codec's l2 error bound gamma_q*sqrt(d) equals (R^2+7)*gamma.
struct TheoremParams {
  double eta = 0;
  double R = 0;
  double gamma = 0;
  double gamma_q = 0;
};

TheoremParams theorem_params(long long T, int n, int d, int K, double sigma, double G, double L,
                             double f0_gap);

// One encoded vector. `hat` is the encoder's post-rounding vector; it never
// goes on the wire but is retained on the simulation side as the oracle for
// detecting decode failures.
struct Encoded {
  std::vector<uint32_t> residues;  // empty for the lossless codec
  Vec hat;
  bool lossless = false;
  long long wire_bits = 0;
};

// Either a quantizing grid or the exact pass-through codec used for
// uncompressed transfers (accounted as 32 bits per coordinate).
class Codec {
 public:
  static Codec grid(const GridSpec& g);
  static Codec lossless(int dim);

  bool is_lossless() const { return lossless_; }
  int dim() const { return dim_; }
  const GridSpec& grid_spec() const;   // errors on the lossless codec
  double error_bound_l2() const;       // spacing * sqrt(dim); 0 when lossless

  // Stochastic rounding: each coordinate goes to the upper grid point with
  // probability equal to its fractional position in the cell, so E[hat] = x
  // and |hat_i - x_i| <= spacing.
  Encoded encode(const Vec& x, Rng& rng) const;

  // Per coordinate, the unique grid point congruent to the residue that lies
  // in [key_i - window/2, key_i + window/2). Equals the encoder's hat exactly
  // whenever |hat_i - key_i| < window/2 in every coordinate.
  Vec decode(const Vec& key, const Encoded& msg) const;

  struct DecodeResult {
    Vec value;
    bool failed = false;
  };
  // decode plus comparison against the encoder's rounded vector.
  DecodeResult decode_with_oracle(const Vec& key, const Encoded& msg, const Vec& truth) const;

 private:
  Codec() = default;
  GridSpec grid_{};
  bool lossless_ = false;
  int dim_ = 0;
};

// Exact serialized length in bits (payload + header).
long long bits_accounting(const Encoded& msg);

// Bit-exact wire form for grid messages: the 16-byte header followed by the
// residues packed `bits` per coordinate, coordinate-major, LSB-first.
std::vector<uint8_t> serialize(const GridSpec& g, const Encoded& msg);

struct Parsed {
  GridSpec grid;
  Encoded msg;
};
Parsed parse(const std::vector<uint8_t>& bytes);

}  // namespace quafl::quant
