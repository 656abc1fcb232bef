#ifndef FR_TRAINER_HPP_
#define FR_TRAINER_HPP_

#include <memory>
#include <ostream>
#include <string>
#include <vector>

#include "fr/checkpoint.hpp"
#include "fr/config.hpp"
#include "fr/dataset.hpp"
#include "fr/features.hpp"
#include "fr/losses.hpp"
#include "fr/metrics.hpp"
#include "fr/models.hpp"

namespace fr {

// Adaptive-moment optimizer (lr 1e-4 default at the call sites, standard
// beta/eps). Parameters with no accumulated gradient are skipped entirely,
// so frozen modules keep their moments intact.
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<NamedParam> params, double lr, double beta1 = 0.9,
       double beta2 = 0.999, double eps = 1e-8);

  void zero_grad();
  void step();
  long long t() const { return t_; }

  void export_state(const std::string& opt_name, Checkpoint& ck) const;
  void import_state(const std::string& opt_name, const Checkpoint& ck);

 private:
  std::vector<NamedParam> params_;
  std::vector<Tensor> m_, v_;
  double lr_ = 1e-4, b1_ = 0.9, b2_ = 0.999, eps_ = 1e-8;
  long long t_ = 0;
};

// Drives the staged schedule: face-prior pre-training, completion-module
// pre-training under the completion loss, then adversarial end-to-end
// training (frozen-completion warmup followed by joint optimization).
// All randomness is derived from (seed, stage, step), so a resumed run
// replays exactly.
class Trainer {
 public:
  Trainer(const RunConfig& cfg, Corpus corpus);

  // executes the remaining schedule for cfg.mode
  void run();
  // individual phases (no-ops when the schedule has moved past them)
  void train_prior();
  void train_stage1();
  void train_stage2();

  struct EvalResult {
    double psnr = 0, mssim = 0;            // recovered vs ground truth
    double base_psnr = 0, base_mssim = 0;  // bicubic-upsampled occluded input
    int n = 0;
    int psnr_inf_count = 0;
  };
  EvalResult evaluate() const;
  // held-out face-prior loss (landmarks + parsing MSE under alpha/beta)
  double prior_holdout_loss() const;

  Image recover(const Image& lr_occ, const Mask& mask) const;
  // generator output on a fixed probe batch; bit-stable across save/load
  Tensor probe_output() const;

  void save(const std::string& path) const;
  void load(const std::string& path);

  const std::vector<LossReport>& reports() const { return reports_; }
  void set_log_stream(std::ostream* os) { log_ = os; }

  const std::string& stage() const { return stage_; }
  long long step() const { return step_; }
  CompoundGenerator& generator() { return *gen_; }
  FacePriorNet& prior() { return *prior_; }
  PatchDiscriminator& discriminator() { return *disc_; }
  const RunConfig& config() const { return cfg_; }
  long long d_steps() const { return d_steps_; }
  long long g_steps() const { return g_steps_; }

 private:
  struct Batch {
    Tensor lr_occ, lr_gt, hr_gt;  // (n,3,...)
    Tensor masks;                 // (n,1,lr,lr)
    Tensor landmarks, parsing;    // (n,L,...), (n,P,...); empty without priors
  };
  Batch make_batch(long long step, bool occlude) const;
  Batch make_eval_item(int index) const;
  void emit(LossReport r);
  void stage2_step(long long step, bool joint_phase, bool sr_only);
  std::vector<std::string> phases() const;
  void advance_stage();

  RunConfig cfg_;
  Corpus corpus_;
  FeatureExtractor phi_;
  std::shared_ptr<FacePriorNet> prior_;
  std::unique_ptr<CompoundGenerator> gen_;
  std::unique_ptr<PatchDiscriminator> disc_;
  std::vector<NamedParam> fc_params_, sr_params_, disc_params_, prior_params_;
  Adam adam_fc_, adam_sr_, adam_disc_, adam_prior_;

  std::string stage_ = "init";
  long long step_ = 0;
  long long d_steps_ = 0, g_steps_ = 0;
  std::vector<LossReport> reports_;
  std::ostream* log_ = nullptr;
};

// Inference-only handle built from a checkpoint's embedded architecture
// descriptor; no run configuration needed.
class Restorer {
 public:
  explicit Restorer(const std::string& ckpt_path);

  const ModelConfig& config() const { return cfg_; }
  int scale() const { return cfg_.scale; }

  // full pipeline: completion, hard composite, upscaling
  Image recover(const Image& lr_occ, const Mask& mask) const;
  // completion + composite at the input resolution
  Image complete(const Image& occ, const Mask& mask) const;
  // upscaling alone (no occlusion handling)
  Image upscale(const Image& lr) const;

 private:
  ModelConfig cfg_;
  std::shared_ptr<FacePriorNet> prior_;
  std::unique_ptr<CompoundGenerator> gen_;
};

}  // namespace fr

#endif  // FR_TRAINER_HPP_
