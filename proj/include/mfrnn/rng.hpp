#pragma once

#include <cstdint>
#include <random>

namespace mfrnn {

using Engine = std::mt19937_64;

/// SplitMix64 finaliser.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Child seed for stream `stream` of `seed`. Nest calls for deeper lineages,
/// e.g. derive_seed(derive_seed(seed, replica), step).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

inline Engine make_engine(std::uint64_t seed, std::uint64_t stream) {
  return Engine(derive_seed(seed, stream));
}

/// Standard normal draws. std::normal_distribution keeps a cached spare value,
/// so one instance is bound to one engine.
class Normal {
 public:
  explicit Normal(Engine& eng) : eng_(eng) {}
  double operator()() { return dist_(eng_); }

 private:
  Engine& eng_;
  std::normal_distribution<double> dist_{0.0, 1.0};
};

std::uint64_t random_seed();

}  // namespace mfrnn
