#ifndef FR_MODELS_HPP_
#define FR_MODELS_HPP_

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "fr/autograd.hpp"
#include "fr/rng.hpp"

namespace fr {

struct NamedParam {
  std::string name;
  Var var;
};

void set_requires_grad(const std::vector<NamedParam>& params, bool on);
std::uint64_t hash_params(const std::vector<NamedParam>& params);
std::vector<Var> param_vars(const std::vector<NamedParam>& params);

struct ConvLayer {
  Var w, b;
  int stride = 1, pad = 1;

  static ConvLayer make(int in_ch, int out_ch, int k, int stride, int pad,
                        Rng& rng, double init_scale = 1.0);
  Var operator()(const Var& x) const { return conv2d(x, w, b, stride, pad); }
  void collect(const std::string& prefix, std::vector<NamedParam>& out) const;
};

enum class FcVariant { kPlain, kPartial };
enum class SrVariant { kResidual, kCoarseToFine };

const char* to_string(FcVariant v);
const char* to_string(SrVariant v);
FcVariant fc_variant_from_string(const std::string& s);
SrVariant sr_variant_from_string(const std::string& s);

// Architecture hyperparameters for every trainable network. Serialized as
// the architecture descriptor embedded in checkpoints, so inference never
// needs the original config file.
struct ModelConfig {
  FcVariant fc_variant = FcVariant::kPlain;
  SrVariant sr_variant = SrVariant::kResidual;
  int scale = 4;
  int fc_depth = 4;
  int fc_base_ch = 16;
  int sr_base_ch = 24;
  int sr_res_blocks = 4;
  int sr_refine_ch = 16;
  int disc_base_ch = 12;
  int prior_base_ch = 12;
  int landmarks = 5;
  int parse_classes = 4;

  std::string to_json() const;
  static ModelConfig from_json(const std::string& s);
  bool operator==(const ModelConfig& o) const;
};

// Shared trunk with a landmark-heatmap head (sigmoid, values in [0,1]) and
// a parsing head (per-pixel softmax over classes). Operates at HR scale.
class FacePriorNet {
 public:
  FacePriorNet(const ModelConfig& cfg, std::uint64_t seed);

  struct Output {
    Var heatmaps;  // (n, landmarks, h, w)
    Var parsing;   // (n, classes, h, w), channels sum to 1 per pixel
  };
  Output forward(const Var& hr) const;
  void collect(std::vector<NamedParam>& out) const;

 private:
  ConvLayer c1_, c2_, c3_, c4_;
  ConvLayer head_lm_, head_parse_;
};

// Completion network: encoder-decoder with skip connections at the input
// resolution. The partial-conv variant swaps every convolution for a
// mask-aware one and propagates an updated mask layer by layer; the plain
// variant takes the mask as an extra input channel.
class FcModule {
 public:
  FcModule(const ModelConfig& cfg, std::uint64_t seed);

  // Raw network output in [0,1]; callers blend it with the input via
  // masked_blend to preserve visible pixels. mask: (1,1,h,w) or (n,1,h,w).
  Var forward(const Var& img_occ, const Tensor& mask) const;
  void collect(std::vector<NamedParam>& out) const;
  int depth() const { return cfg_.fc_depth; }

 private:
  ModelConfig cfg_;
  std::vector<ConvLayer> enc_;
  std::vector<ConvLayer> dec_;
  ConvLayer out_;
};

// Upscaling network: residual trunk plus log2(scale) sub-pixel stages. The
// coarse-to-fine variant refines the coarse result conditioned on frozen
// face-prior predictions.
class SrModule {
 public:
  SrModule(const ModelConfig& cfg, std::uint64_t seed);

  // prior is required (and only used) by the coarse-to-fine variant
  Var forward(const Var& lr, const FacePriorNet* prior = nullptr) const;
  void collect(std::vector<NamedParam>& out) const;
  int scale() const { return cfg_.scale; }

 private:
  ModelConfig cfg_;
  ConvLayer head_, mid_, out_;
  std::vector<std::pair<ConvLayer, ConvLayer>> blocks_;
  std::vector<ConvLayer> up_;
  ConvLayer ref1_, ref2_, ref_out_;
};

// Strided conv stack ending in a sigmoid score map over patches.
class PatchDiscriminator {
 public:
  PatchDiscriminator(const ModelConfig& cfg, std::uint64_t seed);

  Var forward(const Var& img) const;  // (n,1,k,k), values in (0,1)
  void collect(std::vector<NamedParam>& out) const;
  int receptive_field() const;

 private:
  std::vector<ConvLayer> layers_;
};

// FC -> hard composite -> SR. Visible pixels of the completed image always
// equal the input, independent of the weights.
class CompoundGenerator {
 public:
  CompoundGenerator(const ModelConfig& cfg, std::uint64_t seed,
                    std::shared_ptr<FacePriorNet> prior = nullptr);

  struct Output {
    Var raw_lr;        // direct FC output
    Var completed_lr;  // masked blend of raw and input
    Var hr;            // SR output at input dims * scale
  };
  Output forward(const Var& img_occ, const Tensor& mask) const;

  FcModule& fc() { return fc_; }
  const FcModule& fc() const { return fc_; }
  SrModule& sr() { return sr_; }
  const ModelConfig& config() const { return cfg_; }
  const std::shared_ptr<FacePriorNet>& prior() const { return prior_; }

  void collect_fc(std::vector<NamedParam>& out) const { fc_.collect(out); }
  void collect_sr(std::vector<NamedParam>& out) const { sr_.collect(out); }
  void collect(std::vector<NamedParam>& out) const;

 private:
  ModelConfig cfg_;
  FcModule fc_;
  SrModule sr_;
  std::shared_ptr<FacePriorNet> prior_;
};

}  // namespace fr

#endif  // FR_MODELS_HPP_
