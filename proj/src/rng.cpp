// SPDX-License-Identifier: Apache-2.0
#include "simharness/rng.hpp"

#include <cstring>

#include "simharness/errors.hpp"
#include "simharness/mathutil.hpp"

namespace simharness::rng {

namespace {

constexpr unsigned char kStateFormatTag = 0x01;
constexpr std::size_t kStateBytes = 1 + 8 + 8 + 32;  // tag, stream, draws, s[4]

inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

void put_u64(unsigned char* p, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) p[i] = static_cast<unsigned char>(v >> (56 - 8 * i));
}

std::uint64_t get_u64(const unsigned char* p) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v = (v << 8) | p[i];
  return v;
}

int hex_nibble(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  return -1;
}

}  // namespace

Generator::Generator(std::uint64_t seed, std::uint64_t stream_id)
    : stream_id_(stream_id) {
  std::uint64_t sm = seed;
  for (auto& w : s_) w = splitmix64(sm);
  if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;  // all-zero is the one invalid state
  for (std::uint64_t k = 0; k < stream_id; ++k) long_jump();
}

std::uint64_t Generator::next_u64() {
  const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  ++draws_;
  return result;
}

double Generator::next_uniform() {
  // Force an odd 53-bit mantissa: u is in [2^-53, 1 - 2^-53] and 1-u is
  // exactly representable, which samplers exploit for symmetry.
  return static_cast<double>((next_u64() >> 11) | 1ull) * 0x1.0p-53;
}

void Generator::long_jump() {
  // Advances 2^192 draws (Blackman & Vigna's published polynomial).
  static constexpr std::uint64_t kLongJump[4] = {
      0x76e15d3efefdcbbfull, 0xc5004e441c522fb3ull,
      0x77710069854ee241ull, 0x39109bb02acbe635ull};
  std::uint64_t t[4] = {0, 0, 0, 0};
  for (std::uint64_t jump : kLongJump) {
    for (int b = 0; b < 64; ++b) {
      if (jump & (1ull << b)) {
        t[0] ^= s_[0];
        t[1] ^= s_[1];
        t[2] ^= s_[2];
        t[3] ^= s_[3];
      }
      next_u64();
    }
  }
  for (int i = 0; i < 4; ++i) s_[i] = t[i];
  draws_ = 0;
}

std::string Generator::serialize_state() const {
  unsigned char raw[kStateBytes];
  raw[0] = kStateFormatTag;
  put_u64(raw + 1, stream_id_);
  put_u64(raw + 9, draws_);
  for (int i = 0; i < 4; ++i) put_u64(raw + 17 + 8 * i, s_[i]);
  static const char* digits = "0123456789abcdef";
  std::string hex(2 * kStateBytes, '0');
  for (std::size_t i = 0; i < kStateBytes; ++i) {
    hex[2 * i] = digits[raw[i] >> 4];
    hex[2 * i + 1] = digits[raw[i] & 0xf];
  }
  return hex;
}

Generator Generator::deserialize_state(const std::string& state_hex) {
  if (state_hex.size() != 2 * kStateBytes)
    throw Error(ErrorCode::invalid_state, "state_hex has wrong length");
  unsigned char raw[kStateBytes];
  for (std::size_t i = 0; i < kStateBytes; ++i) {
    const int hi = hex_nibble(state_hex[2 * i]);
    const int lo = hex_nibble(state_hex[2 * i + 1]);
    if (hi < 0 || lo < 0)
      throw Error(ErrorCode::invalid_state, "state_hex is not lowercase hex");
    raw[i] = static_cast<unsigned char>((hi << 4) | lo);
  }
  if (raw[0] != kStateFormatTag)
    throw Error(ErrorCode::invalid_state, "unsupported state format tag");
  Generator g;
  g.stream_id_ = get_u64(raw + 1);
  g.draws_ = get_u64(raw + 9);
  for (int i = 0; i < 4; ++i) g.s_[i] = get_u64(raw + 17 + 8 * i);
  return g;
}

Generator init_generator(std::uint64_t seed, std::uint64_t stream_id) {
  return Generator(seed, stream_id);
}

StatesRecord capture_state(const Generator& g, const std::string& dgm_id,
                           std::uint64_t repetition) {
  return StatesRecord{dgm_id, repetition, g.serialize_state()};
}

Generator restore_state(const StatesRecord& record) {
  return Generator::deserialize_state(record.state_hex);
}

double draw_uniform(Generator& g) { return g.next_uniform(); }

int draw_bernoulli(Generator& g, double p) {
  if (!(p >= 0.0 && p <= 1.0))
    throw Error(ErrorCode::invalid_parameter, "bernoulli: p must lie in [0,1]");
  return draw_uniform(g) < p ? 1 : 0;
}

double draw_normal(Generator& g, double mu, double sigma) {
  if (!(sigma > 0.0))
    throw Error(ErrorCode::invalid_parameter, "normal: sigma must be positive");
  return mu + sigma * mathutil::norm_inv_cdf(draw_uniform(g));
}

}  // namespace simharness::rng
