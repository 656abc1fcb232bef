#ifndef FR_CONFIG_HPP_
#define FR_CONFIG_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fr/losses.hpp"
#include "fr/models.hpp"

namespace fr {

// Full keyed run configuration. The file format is flat keyed text,
// `section.key = value` with '#' comments. Unknown keys are rejected;
// dump() renders every key including defaults and is printed on startup.
struct RunConfig {
  // data
  std::string data_dir;
  std::string eval_dir;  // optional foreign corpus for cross-dataset runs
  double holdout_frac = 0.1;
  double occlusion_frac = 0.25;
  int hr_size = 64;
  int scale = 4;

  // model
  ModelConfig model;

  // train
  std::uint64_t seed = 1;
  int batch = 8;
  double lr = 1e-4;
  int prior_steps = 300;
  int stage1_steps = 800;
  int stage2_steps = 1000;
  double warmup_frac = 0.2;
  std::string mode = "full";  // full|fc_only|sr_only|joint_single|stage2_only
  bool strict_minimax = false;
  bool augment_flip = true;
  int ckpt_interval = 0;  // extra snapshots every N steps; 0 = phase ends only

  // loss weights (lambdas and the face-prior alpha/beta)
  LossWeights weights;

  // out
  std::string out_dir = "runs/out";

  // feature extractor weights; empty = built-in seeded default
  std::string phi_weights;

  static RunConfig from_file(const std::string& path);
  // apply `section.key=value` pairs on top of current values
  void apply(const std::vector<std::pair<std::string, std::string>>& kv);
  void set(const std::string& key, const std::string& value);

  std::string dump() const;

  // derives dependent fields (model.scale, clamped fc depth) and checks
  // every invariant; call before use
  void finalize();

  int lr_size() const { return hr_size / scale; }
  int warmup_steps() const {
    return static_cast<int>(warmup_frac * stage2_steps + 0.5);
  }
};

// If FACERESTORE_OUT_ROOT is set, relative paths are resolved under it.
std::string resolve_out_path(const std::string& path);

}  // namespace fr

#endif  // FR_CONFIG_HPP_
