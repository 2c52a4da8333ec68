#pragma once

#include <cstdint>

namespace dmlsim {

// Finalizer of the splitmix64 generator, used as a 64-bit mixing function.
inline std::uint64_t splitmix64_mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Stateless hash of (seed, stream, counter) into 64 bits. Each argument is
// mixed in separately so that neighbouring keys give unrelated outputs.
inline std::uint64_t mix3(std::uint64_t seed, std::uint64_t stream,
                          std::uint64_t counter) {
  std::uint64_t h = splitmix64_mix(seed ^ 0xA0761D6478BD642FULL);
  h = splitmix64_mix(h ^ stream);
  h = splitmix64_mix(h ^ counter);
  return h;
}

// Map to the open interval (0, 1) using the top 53 bits.
inline double to_unit_open(std::uint64_t h) {
  return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

// Replication r gets its own stream: seed XOR splitmix(r).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t r) {
  return seed ^ splitmix64_mix(r);
}

double inverse_normal_cdf(double p);
double normal_cdf(double x);

// Standard normal draw addressed by (seed, stream, counter); pure function,
// so simulation output is independent of evaluation order.
inline double counter_normal(std::uint64_t seed, std::uint64_t stream,
                             std::uint64_t counter) {
  return inverse_normal_cdf(to_unit_open(mix3(seed, stream, counter)));
}

}  // namespace dmlsim
