#ifndef FR_CHECKPOINT_HPP_
#define FR_CHECKPOINT_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fr/tensor.hpp"

namespace fr {

// Versioned single-file snapshot: JSON header (architecture descriptor,
// schedule position, RNG seed, counters, tensor directory) followed by a
// little-endian float64 payload. A save -> load -> save round trip is
// byte-identical; writes are atomic (temp file + rename).
struct Checkpoint {
  static constexpr int kVersion = 1;

  int version = kVersion;
  std::string arch_json;
  std::string stage;
  long long step = 0;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, long long>> counters;
  std::vector<std::pair<std::string, Tensor>> tensors;

  const Tensor* find(const std::string& name) const;
  long long counter(const std::string& name, long long fallback = 0) const;
  void put(const std::string& name, const Tensor& t) {
    tensors.emplace_back(name, t);
  }
};

void save_checkpoint(const Checkpoint& c, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace fr

#endif  // FR_CHECKPOINT_HPP_
