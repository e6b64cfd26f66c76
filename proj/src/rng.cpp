#include "mfrnn/rng.hpp"

namespace mfrnn {

std::uint64_t random_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

}  // namespace mfrnn
