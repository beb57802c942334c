#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "doctest.h"

#include "core/error.hpp"
#include "core/quant.hpp"
#include "core/rng.hpp"

using namespace quafl;
using namespace quafl::quant;

namespace {

Errc code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return Errc{};
}

// hand-built message for exercising the decoder in isolation
Encoded raw_message(std::vector<uint32_t> residues) {
  Encoded msg;
  msg.residues = std::move(residues);
  msg.hat.assign(msg.residues.size(), 0.0);
  return msg;
}

}  // namespace

TEST_CASE("make_grid computes the wrap window") {
  const auto g = make_grid(8, 0.01, 32);
  CHECK(g.bits == 8);
  CHECK(g.spacing == 0.01);
  CHECK(g.dim == 32);
  CHECK(g.window == 256.0 * 0.01);

  CHECK(code_of([] { make_grid(0, 1.0, 4); }) == Errc::invalid_argument);
  CHECK(code_of([] { make_grid(33, 1.0, 4); }) == Errc::invalid_argument);
  CHECK(code_of([] { make_grid(8, 0.0, 4); }) == Errc::invalid_argument);
  CHECK(code_of([] { make_grid(8, -1.0, 4); }) == Errc::invalid_argument);
  CHECK(code_of([] { make_grid(8, 1.0, 0); }) == Errc::invalid_argument);
}

TEST_CASE("theorem parameters match the closed forms") {
  // eta = (n+1)/sqrt(T)
  CHECK(theorem_params(10000, 9, 5, 3, 1.0, 0.5, 1.0, 2.0).eta == doctest::Approx(0.1));
  // R = 2 + T^(3/d): 32^(3/5) = 8
  CHECK(theorem_params(32, 4, 5, 2, 1.0, 0.5, 1.0, 2.0).R == doctest::Approx(10.0));

  const long long T = 300;
  const int n = 16, d = 10, K = 5;
  const double sigma = 0.3, G = 0.8, L = 1.0, gap = 1.5;
  const auto p = theorem_params(T, n, d, K, sigma, G, L, gap);
  const double amp = p.R * p.R + 7.0;
  CHECK(p.eta == doctest::Approx((n + 1) / std::sqrt(double(T))));
  CHECK(p.gamma ==
        doctest::Approx(p.eta / amp * std::sqrt(sigma * sigma + 2.0 * K * G * G + gap / L)));
  CHECK(p.gamma_q == doctest::Approx(amp * p.gamma / std::sqrt(double(d))));

  CHECK(code_of([] { theorem_params(0, 4, 5, 2, 1, 1, 1, 1); }) == Errc::invalid_argument);
  CHECK(code_of([] { theorem_params(10, 0, 5, 2, 1, 1, 1, 1); }) == Errc::invalid_argument);
  CHECK(code_of([] { theorem_params(10, 4, 5, 2, 1, 1, 0, 1); }) == Errc::invalid_argument);
  CHECK(code_of([] { theorem_params(10, 4, 5, 2, -1, 1, 1, 1); }) == Errc::invalid_argument);
}

TEST_CASE("stochastic rounding is exact on grid points") {
  const auto codec = Codec::grid(make_grid(8, 0.5, 4));
  const Vec x = {1.0, -2.5, 0.0, 3.5};
  Rng rng(1);
  const auto msg = codec.encode(x, rng);
  CHECK(msg.hat == x);
  CHECK(msg.residues == std::vector<uint32_t>{2, 251, 0, 7});  // k = 2, -5, 0, 7 mod 256
  CHECK(codec.decode(x, msg) == x);
}

TEST_CASE("rounding frequency matches the fractional part") {
  const auto codec = Codec::grid(make_grid(4, 1.0, 1));
  Rng rng(99);
  const int trials = 100000;
  int ups = 0;
  for (int i = 0; i < trials; ++i) {
    const auto msg = codec.encode({0.25}, rng);
    if (msg.hat[0] == 1.0) ++ups;
    else CHECK(msg.hat[0] == 0.0);
  }
  const double freq = double(ups) / trials;
  // 3 sigma for a Bernoulli(0.25) mean over 1e5 draws
  CHECK(std::fabs(freq - 0.25) < 3.0 * std::sqrt(0.25 * 0.75 / trials));
}

TEST_CASE("decoder picks the point congruent to the residue nearest the key") {
  // b=2, spacing 1: wrap 4, window 4
  const auto codec = Codec::grid(make_grid(2, 1.0, 1));
  const auto msg = raw_message({1});

  CHECK(codec.decode({4.6}, msg)[0] == 5.0);    // [2.6, 6.6) holds 5
  CHECK(codec.decode({10.0}, msg)[0] == 9.0);   // [8, 12) holds 9: wrong point, silently
  CHECK(codec.decode({-3.0}, msg)[0] == -3.0);  // [-5, -1) holds -3

  const auto good = codec.decode_with_oracle({4.6}, msg, {5.0});
  CHECK_FALSE(good.failed);
  CHECK(good.value[0] == 5.0);
  const auto bad = codec.decode_with_oracle({10.0}, msg, {5.0});
  CHECK(bad.failed);
  CHECK(bad.value[0] == 9.0);
}

TEST_CASE("decode window is closed below and open above") {
  const auto codec = Codec::grid(make_grid(2, 1.0, 1));
  const auto msg = raw_message({0});
  // key 2: [0, 4) contains 0, not 4
  CHECK(codec.decode({2.0}, msg)[0] == 0.0);
  // key -2: [-4, 0) contains -4, not 0
  CHECK(codec.decode({-2.0}, msg)[0] == -4.0);
}

TEST_CASE("lossless codec is the identity and never fails") {
  const auto codec = Codec::lossless(3);
  CHECK(codec.is_lossless());
  CHECK(codec.dim() == 3);
  CHECK(codec.error_bound_l2() == 0.0);

  const Vec x = {0.1, -0.2, 0.3};
  Rng rng(5);
  const auto msg = codec.encode(x, rng);
  CHECK(msg.lossless);
  CHECK(msg.hat == x);
  CHECK(bits_accounting(msg) == 32 * 3 + kHeaderBits);
  CHECK(codec.decode({9.0, 9.0, 9.0}, msg) == x);  // key is irrelevant
  CHECK_FALSE(codec.decode_with_oracle({9.0, 9.0, 9.0}, msg, x).failed);

  CHECK_THROWS_AS((void)codec.grid_spec(), Error);
  CHECK(code_of([&] { serialize(make_grid(8, 1.0, 3), msg); }) == Errc::invalid_argument);
}

TEST_CASE("wire size counts the header plus packed residues") {
  Rng rng(3);
  const Vec x(10, 0.0);
  {
    const auto codec = Codec::grid(make_grid(12, 0.25, 10));
    const auto msg = codec.encode(x, rng);
    CHECK(bits_accounting(msg) == 12 * 10 + 128);
    CHECK(serialize(codec.grid_spec(), msg).size() == 16 + (120 + 7) / 8);
  }
  {
    const auto codec = Codec::grid(make_grid(16, 0.25, 10));
    const auto msg = codec.encode(x, rng);
    CHECK(bits_accounting(msg) == 16 * 10 + 128);
    CHECK(serialize(codec.grid_spec(), msg).size() == 16 + 160 / 8);
  }
}

TEST_CASE("serialization layout is byte exact and parses back") {
  const auto g = make_grid(4, 1.0, 3);
  const auto codec = Codec::grid(g);
  Rng rng(11);
  const auto msg = codec.encode({1.0, 2.0, 15.0}, rng);
  CHECK(msg.residues == std::vector<uint32_t>{1, 2, 15});

  const auto bytes = serialize(g, msg);
  REQUIRE(bytes.size() == 18);
  CHECK(bytes[0] == 3);  // dim, little endian
  CHECK(bytes[1] == 0);
  CHECK(bytes[2] == 0);
  CHECK(bytes[3] == 0);
  CHECK(bytes[4] == 4);     // bits
  CHECK(bytes[13] == 0);    // codec id
  CHECK(bytes[14] == 0);    // reserved
  CHECK(bytes[15] == 0);
  CHECK(bytes[16] == 0x21);  // residues 1,2 packed lsb first
  CHECK(bytes[17] == 0x0F);  // residue 15

  const auto parsed = parse(bytes);
  CHECK(parsed.grid.bits == 4);
  CHECK(parsed.grid.spacing == 1.0);
  CHECK(parsed.grid.dim == 3);
  CHECK(parsed.msg.residues == msg.residues);
  CHECK(parsed.msg.wire_bits == 4 * 3 + 128);
  CHECK(codec.decode({1.0, 2.0, 15.0}, parsed.msg) == msg.hat);
}

TEST_CASE("malformed messages are rejected") {
  const auto g = make_grid(4, 1.0, 3);
  const auto codec = Codec::grid(g);
  Rng rng(11);
  auto bytes = serialize(g, codec.encode({1.0, 2.0, 3.0}, rng));

  CHECK(code_of([] { parse(std::vector<uint8_t>(8, 0)); }) == Errc::parse);

  auto truncated = bytes;
  truncated.pop_back();
  CHECK(code_of([&] { parse(truncated); }) == Errc::parse);

  auto extended = bytes;
  extended.push_back(0);
  CHECK(code_of([&] { parse(extended); }) == Errc::parse);

  auto wrong_id = bytes;
  wrong_id[13] = 7;
  CHECK(code_of([&] { parse(wrong_id); }) == Errc::parse);
}

TEST_CASE("quantization error is bounded by one cell and unbiased") {
  const auto codec = Codec::grid(make_grid(8, 0.125, 16));
  Rng rng(7);
  double max_err = 0.0, sum_err = 0.0;
  long long count = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    Vec x(16);
    for (auto& v : x) v = rng.uniform(-3.0, 3.0);
    const auto msg = codec.encode(x, rng);
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double err = msg.hat[j] - x[j];
      max_err = std::max(max_err, std::fabs(err));
      sum_err += err;
      ++count;
    }
  }
  CHECK(max_err <= 0.125);
  // 4 standard errors, with per-draw sd at most spacing/2
  CHECK(std::fabs(sum_err / double(count)) <
        4.0 * 0.0625 / std::sqrt(double(count)));
}

TEST_CASE("decode recovers the encoded point while the key stays in the window") {
  const auto g = make_grid(6, 0.03125, 8);  // window 2
  const auto codec = Codec::grid(g);
  Rng rng(21);
  for (int trial = 0; trial < 200; ++trial) {
    Vec x(8), key(8);
    for (std::size_t j = 0; j < x.size(); ++j) {
      x[j] = rng.uniform(-5.0, 5.0);
      key[j] = x[j] + rng.uniform(-g.window / 2 + 2 * g.spacing, g.window / 2 - 2 * g.spacing);
    }
    const auto msg = codec.encode(x, rng);
    const auto res = codec.decode_with_oracle(key, msg, msg.hat);
    CHECK_FALSE(res.failed);
    CHECK(res.value == msg.hat);
  }
}

TEST_CASE("encoding is deterministic given the rng seed") {
  const auto codec = Codec::grid(make_grid(8, 0.01, 12));
  Rng a(42), b(42);
  for (int trial = 0; trial < 10; ++trial) {
    Vec x(12);
    for (std::size_t j = 0; j < x.size(); ++j) x[j] = 0.7 * double(trial) - 0.3 * double(j);
    const auto ma = codec.encode(x, a);
    const auto mb = codec.encode(x, b);
    CHECK(ma.residues == mb.residues);
    CHECK(ma.hat == mb.hat);
  }
}

TEST_CASE("encode and decode reject bad inputs") {
  const auto codec = Codec::grid(make_grid(8, 0.5, 4));
  Rng rng(1);
  CHECK(code_of([&] { codec.encode({1.0, 2.0}, rng); }) == Errc::invalid_argument);
  Vec bad = {1.0, 2.0, std::nan(""), 4.0};
  CHECK(code_of([&] { codec.encode(bad, rng); }) == Errc::invalid_argument);
  const auto msg = codec.encode({0.0, 0.0, 0.0, 0.0}, rng);
  CHECK(code_of([&] { codec.decode({0.0}, msg); }) == Errc::invalid_argument);
}
