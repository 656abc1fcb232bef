#include "fr/trainer.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>
#include <stdexcept>

#include "fr/rng.hpp"

namespace fs = std::filesystem;

namespace fr {

namespace {

constexpr std::uint64_t kBatchTag = 0x62617463ull;
constexpr std::uint64_t kMaskTag = 0x6d61736bull;
constexpr std::uint64_t kAugTag = 0x617567ull;
constexpr std::uint64_t kEvalTag = 0x6576616cull;
constexpr std::uint64_t kProbeTag = 0x70726f62ull;

std::uint64_t stage_key(const std::string& stage) {
  return hash_bytes(stage.data(), stage.size());
}

void assign_params(const Checkpoint& ck,
                   const std::vector<NamedParam>& params) {
  for (const auto& p : params) {
    const Tensor* t = ck.find(p.name);
    if (!t)
      throw std::runtime_error("checkpoint: missing tensor " + p.name);
    if (t->shape != p.var->value.shape)
      throw std::runtime_error("checkpoint: shape mismatch for " + p.name);
    p.var->value = *t;
  }
}

// temporarily drops requires_grad on every parameter (inference paths)
class FreezeScope {
 public:
  explicit FreezeScope(std::vector<const std::vector<NamedParam>*> groups)
      : groups_(std::move(groups)) {
    for (const auto* g : groups_)
      for (const auto& p : *g) {
        saved_.push_back(p.var->requires_grad);
        p.var->requires_grad = false;
      }
  }
  ~FreezeScope() {
    std::size_t i = 0;
    for (const auto* g : groups_)
      for (const auto& p : *g) p.var->requires_grad = saved_[i++];
  }

 private:
  std::vector<const std::vector<NamedParam>*> groups_;
  std::vector<bool> saved_;
};

}  // namespace

// ---- Adam ----

Adam::Adam(std::vector<NamedParam> params, double lr, double beta1,
           double beta2, double eps)
    : params_(std::move(params)), lr_(lr), b1_(beta1), b2_(beta2), eps_(eps) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& p : params_) {
    m_.push_back(Tensor::zeros(p.var->value.shape));
    v_.push_back(Tensor::zeros(p.var->value.shape));
  }
}

void Adam::zero_grad() {
  for (const auto& p : params_) p.var->clear_grad();
}

void Adam::step() {
  bool any = false;
  for (const auto& p : params_)
    if (!p.var->grad.empty()) {
      any = true;
      break;
    }
  if (!any) return;
  ++t_;
  const double bc1 = 1.0 - std::pow(b1_, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(b2_, static_cast<double>(t_));
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Node& n = *params_[i].var;
    if (n.grad.empty()) continue;
    for (std::size_t k = 0; k < n.value.size(); ++k) {
      const double g = n.grad.v[k];
      m_[i].v[k] = b1_ * m_[i].v[k] + (1.0 - b1_) * g;
      v_[i].v[k] = b2_ * v_[i].v[k] + (1.0 - b2_) * g * g;
      n.value.v[k] -=
          lr_ * (m_[i].v[k] / bc1) / (std::sqrt(v_[i].v[k] / bc2) + eps_);
    }
  }
}

void Adam::export_state(const std::string& opt_name, Checkpoint& ck) const {
  ck.counters.emplace_back(opt_name + ".t", t_);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    ck.put(opt_name + "." + params_[i].name + ".m", m_[i]);
    ck.put(opt_name + "." + params_[i].name + ".v", v_[i]);
  }
}

void Adam::import_state(const std::string& opt_name, const Checkpoint& ck) {
  t_ = ck.counter(opt_name + ".t", 0);
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const Tensor* m = ck.find(opt_name + "." + params_[i].name + ".m");
    const Tensor* v = ck.find(opt_name + "." + params_[i].name + ".v");
    if (!m || !v) {
      if (t_ == 0) continue;  // fresh optimizer state is all zeros
      throw std::runtime_error("checkpoint: missing optimizer state for " +
                               params_[i].name);
    }
    m_[i] = *m;
    v_[i] = *v;
  }
}

// ---- Trainer ----

Trainer::Trainer(const RunConfig& cfg, Corpus corpus)
    : cfg_(cfg), corpus_(std::move(corpus)) {
  cfg_.finalize();
  if (corpus_.size() < 2)
    throw std::invalid_argument("Trainer: corpus too small");
  if (corpus_.crop_size() != cfg_.hr_size)
    throw std::invalid_argument(
        "Trainer: corpus crop size " + std::to_string(corpus_.crop_size()) +
        " does not match configured hr size " + std::to_string(cfg_.hr_size));
  if (corpus_.has_priors()) {
    if (corpus_.landmarks() != cfg_.model.landmarks ||
        corpus_.parse_classes() != cfg_.model.parse_classes)
      throw std::invalid_argument(
          "Trainer: corpus prior dims do not match model config");
  }

  phi_ = cfg_.phi_weights.empty() ? FeatureExtractor::make_default()
                                  : FeatureExtractor::load(cfg_.phi_weights);
  prior_ = std::make_shared<FacePriorNet>(cfg_.model,
                                          derive_key({cfg_.seed, 101}));
  gen_ = std::make_unique<CompoundGenerator>(
      cfg_.model, derive_key({cfg_.seed, 102}), prior_);
  disc_ = std::make_unique<PatchDiscriminator>(cfg_.model,
                                               derive_key({cfg_.seed, 103}));

  gen_->collect_fc(fc_params_);
  gen_->collect_sr(sr_params_);
  disc_->collect(disc_params_);
  prior_->collect(prior_params_);
  adam_fc_ = Adam(fc_params_, cfg_.lr);
  adam_sr_ = Adam(sr_params_, cfg_.lr);
  adam_disc_ = Adam(disc_params_, cfg_.lr);
  adam_prior_ = Adam(prior_params_, cfg_.lr);
}

std::vector<std::string> Trainer::phases() const {
  const bool priors = corpus_.has_priors();
  if (cfg_.mode == "fc_only") return {"stage1"};
  if (cfg_.mode == "full") {
    if (priors) return {"prior", "stage1", "stage2"};
    return {"stage1", "stage2"};
  }
  // sr_only, joint_single, stage2_only
  if (priors) return {"prior", "stage2"};
  return {"stage2"};
}

void Trainer::advance_stage() {
  const auto ph = phases();
  if (stage_ == "init") {
    stage_ = ph.front();
    step_ = 0;
    return;
  }
  for (std::size_t i = 0; i < ph.size(); ++i)
    if (ph[i] == stage_) {
      stage_ = i + 1 < ph.size() ? ph[i + 1] : "done";
      step_ = 0;
      return;
    }
  stage_ = "done";
}

void Trainer::run() {
  if (stage_ == "init") advance_stage();
  const std::string ckpt_path =
      cfg_.out_dir.empty()
          ? ""
          : resolve_out_path(cfg_.out_dir) + "/checkpoint.bin";
  while (stage_ != "done") {
    if (stage_ == "prior") train_prior();
    else if (stage_ == "stage1") train_stage1();
    else if (stage_ == "stage2") train_stage2();
    else break;
    if (!ckpt_path.empty()) {
      fs::create_directories(resolve_out_path(cfg_.out_dir));
      save(ckpt_path);
    }
  }
}

Trainer::Batch Trainer::make_batch(long long step, bool occlude) const {
  const auto train = corpus_.train_indices(cfg_.holdout_frac);
  const int n = cfg_.batch;
  const int lrs = cfg_.lr_size();
  const int hrs = cfg_.hr_size;
  const std::uint64_t sk = stage_key(stage_);

  Batch b;
  b.lr_occ = Tensor(Shape{n, 3, lrs, lrs});
  b.lr_gt = Tensor(Shape{n, 3, lrs, lrs});
  b.hr_gt = Tensor(Shape{n, 3, hrs, hrs});
  b.masks = Tensor(Shape{n, 1, lrs, lrs});
  if (corpus_.has_priors()) {
    b.landmarks = Tensor(Shape{n, cfg_.model.landmarks, hrs, hrs});
    b.parsing = Tensor(Shape{n, cfg_.model.parse_classes, hrs, hrs});
  }

  Rng rb(derive_key({cfg_.seed, sk, static_cast<std::uint64_t>(step),
                     kBatchTag}));
  for (int s = 0; s < n; ++s) {
    const int idx = train[rb.uniform_int(0, static_cast<int>(train.size()) - 1)];
    Rng ra(derive_key({cfg_.seed, sk, static_cast<std::uint64_t>(step),
                       static_cast<std::uint64_t>(s), kAugTag}));
    const int maxoff = corpus_.max_crop_offset();
    const int cy = ra.uniform_int(0, maxoff);
    const int cx = ra.uniform_int(0, maxoff);
    const bool flip = cfg_.augment_flip && ra.uniform() < 0.5;

    Mask mask(lrs, lrs, 1);
    if (occlude)
      mask = random_block_mask(
          lrs, lrs, cfg_.occlusion_frac,
          derive_key({cfg_.seed, sk, static_cast<std::uint64_t>(step),
                      static_cast<std::uint64_t>(s), kMaskTag}));
    SampleRecord rec =
        corpus_.record(idx, ScaleFactor(cfg_.scale), mask, cy, cx, flip);

    const std::size_t lplane = static_cast<std::size_t>(3) * lrs * lrs;
    const std::size_t hplane = static_cast<std::size_t>(3) * hrs * hrs;
    std::copy(rec.lr_occ.px.begin(), rec.lr_occ.px.end(),
              b.lr_occ.v.begin() + lplane * s);
    std::copy(rec.lr_gt.px.begin(), rec.lr_gt.px.end(),
              b.lr_gt.v.begin() + lplane * s);
    std::copy(rec.hr_gt.px.begin(), rec.hr_gt.px.end(),
              b.hr_gt.v.begin() + hplane * s);
    Tensor mt = rec.mask.to_tensor();
    std::copy(mt.v.begin(), mt.v.end(),
              b.masks.v.begin() + static_cast<std::size_t>(lrs) * lrs * s);
    if (corpus_.has_priors()) {
      std::copy(rec.landmarks_gt.v.begin(), rec.landmarks_gt.v.end(),
                b.landmarks.v.begin() + rec.landmarks_gt.size() * s);
      std::copy(rec.parsing_gt.v.begin(), rec.parsing_gt.v.end(),
                b.parsing.v.begin() + rec.parsing_gt.size() * s);
    }
  }
  return b;
}

void Trainer::emit(LossReport r) {
  if (log_) *log_ << to_json_line(r) << "\n";
  reports_.push_back(std::move(r));
}

void Trainer::train_prior() {
  if (stage_ == "init") advance_stage();
  if (stage_ != "prior") return;
  if (!corpus_.has_priors())
    throw std::runtime_error(
        "train_prior: corpus has no landmark/parsing annotations");
  for (; step_ < cfg_.prior_steps; ++step_) {
    Batch b = make_batch(step_, false);
    FacePriorNet::Output out = prior_->forward(constant(b.hr_gt));
    Var loss = face_prior_loss(out.heatmaps, constant(b.landmarks),
                               out.parsing, constant(b.parsing),
                               cfg_.weights.fp_alpha, cfg_.weights.fp_beta);
    adam_prior_.zero_grad();
    backward(loss);
    adam_prior_.step();

    LossReport r;
    r.step = step_;
    r.stage = "prior";
    r.set("face_prior", scalar_value(loss));
    emit(std::move(r));
    if (step_ % 50 == 0)
      std::cerr << "[prior] step " << step_ << "/" << cfg_.prior_steps
                << " loss " << scalar_value(loss) << "\n";
  }
  advance_stage();
}

void Trainer::train_stage1() {
  if (stage_ == "init") advance_stage();
  while (stage_ == "prior") train_prior();
  if (stage_ != "stage1") return;
  for (; step_ < cfg_.stage1_steps; ++step_) {
    Batch b = make_batch(step_, true);
    Var lr_occ = constant(b.lr_occ);
    Var lr_gt = constant(b.lr_gt);
    Var raw = gen_->fc().forward(lr_occ, b.masks);
    Var completed = masked_blend(raw, lr_occ, b.masks);

    FcTerms t;
    t.style = style_loss(raw, completed, lr_gt, phi_);
    t.perceptual = perceptual_loss_pair(raw, completed, lr_gt, phi_);
    t.pixel = pixel_loss(completed, lr_gt);
    t.smooth = smooth_loss(completed);
    Var loss = l_fc(t, cfg_.weights);

    adam_fc_.zero_grad();
    backward(loss);
    adam_fc_.step();

    LossReport r;
    r.step = step_;
    r.stage = "stage1";
    r.set("style", scalar_value(t.style));
    r.set("perceptual", scalar_value(t.perceptual));
    r.set("pixel", scalar_value(t.pixel));
    r.set("smooth", scalar_value(t.smooth));
    r.set("l_fc", scalar_value(loss));
    emit(std::move(r));
    if (step_ % 50 == 0)
      std::cerr << "[stage1] step " << step_ << "/" << cfg_.stage1_steps
                << " l_fc " << scalar_value(loss) << "\n";
  }
  advance_stage();
}

void Trainer::stage2_step(long long step, bool joint_phase, bool sr_only) {
  Batch b = make_batch(step, !sr_only);
  Var hr_gt = constant(b.hr_gt);

  Var raw, completed, hr;
  if (sr_only) {
    hr = gen_->sr().forward(constant(b.lr_gt), gen_->prior().get());
  } else {
    CompoundGenerator::Output go = gen_->forward(constant(b.lr_occ), b.masks);
    raw = go.raw_lr;
    completed = go.completed_lr;
    hr = go.hr;
  }

  // discriminator update on a detached generator output
  adam_disc_.zero_grad();
  Var d_real = disc_->forward(hr_gt);
  Var d_fake = disc_->forward(constant(hr->value));
  Var d_loss = adversarial_d_loss(d_real, d_fake);
  backward(d_loss);
  adam_disc_.step();
  ++d_steps_;

  // generator update
  SrTerms st;
  st.adv = adversarial_g_loss(disc_->forward(hr), cfg_.strict_minimax);
  if (corpus_.has_priors()) {
    FacePriorNet::Output p = prior_->forward(hr);
    st.face_prior = face_prior_loss(p.heatmaps, constant(b.landmarks),
                                    p.parsing, constant(b.parsing),
                                    cfg_.weights.fp_alpha, cfg_.weights.fp_beta);
  } else {
    st.face_prior = constant(Tensor::scalar(0.0));
  }
  st.perceptual = perceptual_loss(hr, hr_gt, phi_);
  st.pixel = pixel_loss(hr, hr_gt);
  st.smooth = smooth_loss(hr);
  Var loss_sr = l_sr(st, cfg_.weights);

  Var total = loss_sr;
  FcTerms ft;
  const bool fc_active = joint_phase && !sr_only;
  if (fc_active) {
    Var lr_gt = constant(b.lr_gt);
    ft.style = style_loss(raw, completed, lr_gt, phi_);
    ft.perceptual = perceptual_loss_pair(raw, completed, lr_gt, phi_);
    ft.pixel = pixel_loss(completed, lr_gt);
    ft.smooth = smooth_loss(completed);
    total = l_total(l_fc(ft, cfg_.weights), loss_sr);
  }

  adam_sr_.zero_grad();
  if (fc_active) adam_fc_.zero_grad();
  backward(total);
  adam_sr_.step();
  if (fc_active) adam_fc_.step();
  ++g_steps_;

  LossReport r;
  r.step = step;
  r.stage = sr_only ? "stage2-sr" : (joint_phase ? "stage2-joint" : "stage2-warmup");
  r.set("d_loss", scalar_value(d_loss));
  r.set("adv", scalar_value(st.adv));
  r.set("face_prior", scalar_value(st.face_prior));
  r.set("perceptual_hr", scalar_value(st.perceptual));
  r.set("pixel_hr", scalar_value(st.pixel));
  r.set("smooth_hr", scalar_value(st.smooth));
  r.set("l_sr", scalar_value(loss_sr));
  if (fc_active) {
    r.set("style_lr", scalar_value(ft.style));
    r.set("perceptual_lr", scalar_value(ft.perceptual));
    r.set("pixel_lr", scalar_value(ft.pixel));
    r.set("smooth_lr", scalar_value(ft.smooth));
    r.set("l_total", scalar_value(total));
  }
  emit(std::move(r));
  if (step % 50 == 0)
    std::cerr << "[stage2] step " << step << "/" << cfg_.stage2_steps << " "
              << (joint_phase ? "joint" : "warmup") << " loss "
              << scalar_value(total) << "\n";
}

void Trainer::train_stage2() {
  if (stage_ == "init") advance_stage();
  while (stage_ == "prior" || stage_ == "stage1") {
    if (stage_ == "prior") train_prior();
    else train_stage1();
  }
  if (stage_ != "stage2") return;

  const bool sr_only = cfg_.mode == "sr_only";
  const bool joint_from_scratch = cfg_.mode == "joint_single";
  const int warmup =
      (sr_only || joint_from_scratch) ? 0 : cfg_.warmup_steps();

  // the prior net only serves the loss here; it must never move
  set_requires_grad(prior_params_, false);
  const std::uint64_t prior_hash = hash_params(prior_params_);

  bool fc_frozen = !sr_only && step_ < warmup;
  std::uint64_t fc_hash = 0;
  if (fc_frozen) {
    set_requires_grad(fc_params_, false);
    fc_hash = hash_params(fc_params_);
  }

  for (; step_ < cfg_.stage2_steps; ++step_) {
    if (fc_frozen && step_ >= warmup) {
      if (hash_params(fc_params_) != fc_hash)
        throw std::logic_error("stage2: frozen completion module changed");
      set_requires_grad(fc_params_, true);
      fc_frozen = false;
    }
    const bool joint_phase = !fc_frozen;
    stage2_step(step_, joint_phase && !sr_only, sr_only);
    if (cfg_.ckpt_interval > 0 && step_ > 0 &&
        step_ % cfg_.ckpt_interval == 0 && !cfg_.out_dir.empty()) {
      fs::create_directories(resolve_out_path(cfg_.out_dir));
      save(resolve_out_path(cfg_.out_dir) + "/checkpoint.bin");
    }
  }

  if (fc_frozen) {
    if (hash_params(fc_params_) != fc_hash)
      throw std::logic_error("stage2: frozen completion module changed");
    set_requires_grad(fc_params_, true);
  }
  if (hash_params(prior_params_) != prior_hash)
    throw std::logic_error("stage2: frozen prior network changed");
  advance_stage();
}

Trainer::EvalResult Trainer::evaluate() const {
  FreezeScope freeze({&fc_params_, &sr_params_, &disc_params_, &prior_params_});
  EvalResult res;
  double psnr_acc = 0, mssim_acc = 0, bp_acc = 0, bm_acc = 0;
  int psnr_n = 0;
  const auto eval = corpus_.eval_indices(cfg_.holdout_frac);
  const int lrs = cfg_.lr_size();
  for (int idx : eval) {
    Mask mask = random_block_mask(
        lrs, lrs, cfg_.occlusion_frac,
        derive_key({cfg_.seed, kEvalTag, static_cast<std::uint64_t>(idx)}));
    SampleRecord rec = corpus_.record_eval(idx, ScaleFactor(cfg_.scale), mask);

    Image rec_hr = recover(rec.lr_occ, rec.mask);
    const double p = psnr(rec_hr, rec.hr_gt);
    const double m = mssim(rec_hr, rec.hr_gt);
    Image base = upsample_bicubic(rec.lr_occ, ScaleFactor(cfg_.scale));
    const double bp = psnr(base, rec.hr_gt);
    const double bm = mssim(base, rec.hr_gt);

    if (std::isinf(p) || std::isinf(bp)) {
      ++res.psnr_inf_count;
    } else {
      psnr_acc += p;
      bp_acc += bp;
      ++psnr_n;
    }
    mssim_acc += m;
    bm_acc += bm;
    ++res.n;
  }
  if (psnr_n > 0) {
    res.psnr = psnr_acc / psnr_n;
    res.base_psnr = bp_acc / psnr_n;
  }
  if (res.n > 0) {
    res.mssim = mssim_acc / res.n;
    res.base_mssim = bm_acc / res.n;
  }
  return res;
}

double Trainer::prior_holdout_loss() const {
  if (!corpus_.has_priors())
    throw std::runtime_error("prior_holdout_loss: corpus has no priors");
  FreezeScope freeze({&fc_params_, &sr_params_, &disc_params_, &prior_params_});
  const auto eval = corpus_.eval_indices(cfg_.holdout_frac);
  double acc = 0;
  for (int idx : eval) {
    SampleRecord rec = corpus_.record_eval(
        idx, ScaleFactor(cfg_.scale), Mask(cfg_.lr_size(), cfg_.lr_size(), 1));
    FacePriorNet::Output out =
        prior_->forward(constant(image_to_tensor(rec.hr_gt)));
    Var loss = face_prior_loss(out.heatmaps, constant(rec.landmarks_gt),
                               out.parsing, constant(rec.parsing_gt),
                               cfg_.weights.fp_alpha, cfg_.weights.fp_beta);
    acc += scalar_value(loss);
  }
  return acc / static_cast<double>(eval.size());
}

Image Trainer::recover(const Image& lr_occ, const Mask& mask) const {
  FreezeScope freeze({&fc_params_, &sr_params_, &disc_params_, &prior_params_});
  if (mask.height != lr_occ.height || mask.width != lr_occ.width)
    throw std::invalid_argument("recover: mask dims do not match image");
  CompoundGenerator::Output out =
      gen_->forward(constant(image_to_tensor(lr_occ)), mask.to_tensor());
  Image img = tensor_to_image(out.hr->value);
  img.check_unit_range("recover");
  return img;
}

Tensor Trainer::probe_output() const {
  FreezeScope freeze({&fc_params_, &sr_params_, &disc_params_, &prior_params_});
  const int lrs = cfg_.lr_size();
  Mask mask = random_block_mask(lrs, lrs, cfg_.occlusion_frac,
                                derive_key({cfg_.seed, kProbeTag}));
  SampleRecord rec =
      corpus_.record_eval(corpus_.size() - 1, ScaleFactor(cfg_.scale), mask);
  CompoundGenerator::Output out =
      gen_->forward(constant(image_to_tensor(rec.lr_occ)), mask.to_tensor());
  return out.hr->value;
}

void Trainer::save(const std::string& path) const {
  Checkpoint ck;
  ck.arch_json = cfg_.model.to_json();
  ck.stage = stage_;
  ck.step = step_;
  ck.seed = cfg_.seed;
  ck.counters.emplace_back("d_steps", d_steps_);
  ck.counters.emplace_back("g_steps", g_steps_);
  for (const auto* group : {&fc_params_, &sr_params_, &disc_params_,
                            &prior_params_})
    for (const auto& p : *group) ck.put(p.name, p.var->value);
  adam_fc_.export_state("adam_fc", ck);
  adam_sr_.export_state("adam_sr", ck);
  adam_disc_.export_state("adam_disc", ck);
  adam_prior_.export_state("adam_prior", ck);
  save_checkpoint(ck, path);
}

void Trainer::load(const std::string& path) {
  Checkpoint ck = load_checkpoint(path);
  const ModelConfig arch = ModelConfig::from_json(ck.arch_json);
  if (!(arch == cfg_.model))
    throw std::runtime_error(
        "Trainer::load: checkpoint architecture does not match configuration");
  assign_params(ck, fc_params_);
  assign_params(ck, sr_params_);
  assign_params(ck, disc_params_);
  assign_params(ck, prior_params_);
  adam_fc_.import_state("adam_fc", ck);
  adam_sr_.import_state("adam_sr", ck);
  adam_disc_.import_state("adam_disc", ck);
  adam_prior_.import_state("adam_prior", ck);
  stage_ = ck.stage;
  step_ = ck.step;
  cfg_.seed = ck.seed;  // resumed runs replay the original streams
  d_steps_ = ck.counter("d_steps");
  g_steps_ = ck.counter("g_steps");
}

// ---- Restorer ----

Restorer::Restorer(const std::string& ckpt_path) {
  Checkpoint ck = load_checkpoint(ckpt_path);
  cfg_ = ModelConfig::from_json(ck.arch_json);
  prior_ = std::make_shared<FacePriorNet>(cfg_, 0);
  gen_ = std::make_unique<CompoundGenerator>(cfg_, 0, prior_);

  std::vector<NamedParam> params;
  gen_->collect(params);
  prior_->collect(params);
  assign_params(ck, params);
  set_requires_grad(params, false);
}

Image Restorer::recover(const Image& lr_occ, const Mask& mask) const {
  if (mask.height != lr_occ.height || mask.width != lr_occ.width)
    throw std::invalid_argument("recover: mask dims do not match image");
  CompoundGenerator::Output out =
      gen_->forward(constant(image_to_tensor(lr_occ)), mask.to_tensor());
  Image img = tensor_to_image(out.hr->value);
  img.check_unit_range("recover");
  return img;
}

Image Restorer::complete(const Image& occ, const Mask& mask) const {
  if (mask.height != occ.height || mask.width != occ.width)
    throw std::invalid_argument("complete: mask dims do not match image");
  Var in = constant(image_to_tensor(occ));
  Tensor mt = mask.to_tensor();
  Var raw = gen_->fc().forward(in, mt);
  Var completed = masked_blend(raw, in, mt);
  return tensor_to_image(completed->value);
}

Image Restorer::upscale(const Image& lr) const {
  Var out = gen_->sr().forward(constant(image_to_tensor(lr)), prior_.get());
  return tensor_to_image(out->value);
}

}  // namespace fr
