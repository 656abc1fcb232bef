#ifndef FR_FEATURES_HPP_
#define FR_FEATURES_HPP_

#include <cstdint>
#include <string>
#include <vector>

#include "fr/autograd.hpp"
#include "fr/tensor.hpp"

namespace fr {

// One feature map per pyramid level, level n at 1/2^(n+1) of the input
// resolution.
using FeaturePyramid = std::vector<Var>;

// Frozen convolutional pyramid backing the perceptual and style losses.
// Each level is conv3x3 (pad 1) + ReLU + 2x2 average pooling. Weights are
// immutable after construction; forward passes are deterministic and
// differentiable w.r.t. the input. Safe to share across threads.
class FeatureExtractor {
 public:
  static constexpr std::uint64_t kDefaultSeed = 0x66656174757265ull;

  // 3 levels, channels 16/32/64, He-init from the seed. Weights are
  // quantized to float32 on creation so a save/load round trip is exact.
  static FeatureExtractor make_default(std::uint64_t seed = kDefaultSeed);

  static FeatureExtractor load(const std::string& path);
  void save(const std::string& path) const;

  int levels() const { return static_cast<int>(levels_.size()); }
  int input_channels() const {
    return levels_.empty() ? 0 : levels_.front().w.shape.c;
  }

  // input (n,c,h,w); h and w must be divisible by 2^levels
  FeaturePyramid extract(const Var& img) const;
  std::vector<Tensor> extract_values(const Tensor& img) const;

 private:
  struct Level {
    Tensor w;  // (oc, ic, 3, 3)
    Tensor b;  // (1, oc, 1, 1)
  };
  std::vector<Level> levels_;
};

}  // namespace fr

#endif  // FR_FEATURES_HPP_
