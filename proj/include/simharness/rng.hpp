// SPDX-License-Identifier: Apache-2.0
#ifndef SIMHARNESS_RNG_HPP
#define SIMHARNESS_RNG_HPP

#include <array>
#include <cstdint>
#include <string>

namespace simharness::rng {

/// Deterministic, serializable generator (xoshiro256++, period 2^256-1).
/// Streams are carved out of the single state cycle by repeated long
/// jumps of 2^192 draws, so distinct stream ids under one seed can never
/// reach one another's states for any realistic draw count.
class Generator {
 public:
  Generator(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t next_u64();

  /// Strictly inside (0,1); 53-bit resolution on a grid closed under
  /// u -> 1-u, so inverse-CDF samplers are exactly sign-symmetric.
  double next_uniform();

  std::uint64_t stream_id() const noexcept { return stream_id_; }
  std::uint64_t draws_made() const noexcept { return draws_; }

  /// Versioned fixed-width lowercase hex encoding of the full state
  /// (format tag, stream id, draw counter, 256-bit core state).
  std::string serialize_state() const;
  static Generator deserialize_state(const std::string& state_hex);

  bool operator==(const Generator& other) const = default;

 private:
  Generator() = default;
  void long_jump();

  std::array<std::uint64_t, 4> s_{};
  std::uint64_t stream_id_ = 0;
  std::uint64_t draws_ = 0;
};

/// One row of the states dataset: the generator state at the start of a
/// repetition (or, for repetition n_sim + 1, the study's end state).
struct StatesRecord {
  std::string dgm_id;
  std::uint64_t repetition = 0;
  std::string state_hex;
};

Generator init_generator(std::uint64_t seed, std::uint64_t stream_id);
StatesRecord capture_state(const Generator& g, const std::string& dgm_id,
                           std::uint64_t repetition);
Generator restore_state(const StatesRecord& record);

double draw_uniform(Generator& g);
int draw_bernoulli(Generator& g, double p);
double draw_normal(Generator& g, double mu, double sigma);

}  // namespace simharness::rng

#endif
