#include "fr/models.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace fr {

namespace {

Var lrelu(const Var& x) { return leaky_relu(x, 0.2); }

// tile a (1,1,h,w) mask to n samples for channel concatenation
Tensor tile_mask(const Tensor& mask, int n) {
  if (mask.shape.n == n) return mask;
  Tensor out(Shape{n, 1, mask.shape.h, mask.shape.w});
  const std::size_t plane =
      static_cast<std::size_t>(mask.shape.h) * mask.shape.w;
  for (int i = 0; i < n; ++i)
    std::copy_n(mask.data(), plane, out.data() + plane * i);
  return out;
}

Tensor mask_union(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mask_union");
  Tensor out = a;
  for (std::size_t i = 0; i < out.size(); ++i)
    out.v[i] = std::max(out.v[i], b.v[i]);
  return out;
}

Tensor mask_up2(const Tensor& m) {
  Tensor out(Shape{m.shape.n, 1, m.shape.h * 2, m.shape.w * 2});
  for (int n = 0; n < m.shape.n; ++n)
    for (int y = 0; y < out.shape.h; ++y)
      for (int x = 0; x < out.shape.w; ++x)
        out.at(n, 0, y, x) = m.at(n, 0, y / 2, x / 2);
  return out;
}

int int_log2(int v) {
  int l = 0;
  while ((1 << l) < v) ++l;
  return l;
}

}  // namespace

void set_requires_grad(const std::vector<NamedParam>& params, bool on) {
  for (const auto& p : params) p.var->requires_grad = on;
}

std::uint64_t hash_params(const std::vector<NamedParam>& params) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (const auto& p : params) {
    h = hash_bytes(p.name.data(), p.name.size(), h);
    h = hash_bytes(p.var->value.data(), p.var->value.size() * sizeof(double),
                   h);
  }
  return h;
}

std::vector<Var> param_vars(const std::vector<NamedParam>& params) {
  std::vector<Var> out;
  out.reserve(params.size());
  for (const auto& p : params) out.push_back(p.var);
  return out;
}

ConvLayer ConvLayer::make(int in_ch, int out_ch, int k, int stride, int pad,
                          Rng& rng, double init_scale) {
  ConvLayer l;
  const double std = init_scale * std::sqrt(2.0 / (in_ch * k * k));
  l.w = leaf(Tensor::normal(Shape{out_ch, in_ch, k, k}, 0.0, std, rng), true);
  l.b = leaf(Tensor::zeros(Shape{1, out_ch, 1, 1}), true);
  l.stride = stride;
  l.pad = pad;
  return l;
}

void ConvLayer::collect(const std::string& prefix,
                        std::vector<NamedParam>& out) const {
  out.push_back({prefix + ".w", w});
  out.push_back({prefix + ".b", b});
}

const char* to_string(FcVariant v) {
  return v == FcVariant::kPlain ? "plain" : "pconv";
}
const char* to_string(SrVariant v) {
  return v == SrVariant::kResidual ? "residual" : "c2f";
}

FcVariant fc_variant_from_string(const std::string& s) {
  if (s == "plain") return FcVariant::kPlain;
  if (s == "pconv") return FcVariant::kPartial;
  throw std::invalid_argument("unknown completion variant: " + s);
}

SrVariant sr_variant_from_string(const std::string& s) {
  if (s == "residual") return SrVariant::kResidual;
  if (s == "c2f") return SrVariant::kCoarseToFine;
  throw std::invalid_argument("unknown upscaler variant: " + s);
}

std::string ModelConfig::to_json() const {
  nlohmann::json j;
  j["fc_variant"] = to_string(fc_variant);
  j["sr_variant"] = to_string(sr_variant);
  j["scale"] = scale;
  j["fc_depth"] = fc_depth;
  j["fc_base_ch"] = fc_base_ch;
  j["sr_base_ch"] = sr_base_ch;
  j["sr_res_blocks"] = sr_res_blocks;
  j["sr_refine_ch"] = sr_refine_ch;
  j["disc_base_ch"] = disc_base_ch;
  j["prior_base_ch"] = prior_base_ch;
  j["landmarks"] = landmarks;
  j["parse_classes"] = parse_classes;
  return j.dump();
}

ModelConfig ModelConfig::from_json(const std::string& s) {
  nlohmann::json j = nlohmann::json::parse(s);
  ModelConfig c;
  c.fc_variant = fc_variant_from_string(j.at("fc_variant").get<std::string>());
  c.sr_variant = sr_variant_from_string(j.at("sr_variant").get<std::string>());
  c.scale = j.at("scale").get<int>();
  c.fc_depth = j.at("fc_depth").get<int>();
  c.fc_base_ch = j.at("fc_base_ch").get<int>();
  c.sr_base_ch = j.at("sr_base_ch").get<int>();
  c.sr_res_blocks = j.at("sr_res_blocks").get<int>();
  c.sr_refine_ch = j.at("sr_refine_ch").get<int>();
  c.disc_base_ch = j.at("disc_base_ch").get<int>();
  c.prior_base_ch = j.at("prior_base_ch").get<int>();
  c.landmarks = j.at("landmarks").get<int>();
  c.parse_classes = j.at("parse_classes").get<int>();
  return c;
}

bool ModelConfig::operator==(const ModelConfig& o) const {
  return to_json() == o.to_json();
}

// ---- FacePriorNet ----

FacePriorNet::FacePriorNet(const ModelConfig& cfg, std::uint64_t seed) {
  Rng rng(derive_key({seed, 0x7072696f72ull}));
  const int b = cfg.prior_base_ch;
  c1_ = ConvLayer::make(3, b, 3, 1, 1, rng);
  c2_ = ConvLayer::make(b, 2 * b, 3, 2, 1, rng);
  c3_ = ConvLayer::make(2 * b, 2 * b, 3, 1, 1, rng);
  c4_ = ConvLayer::make(3 * b, b, 3, 1, 1, rng);
  head_lm_ = ConvLayer::make(b, cfg.landmarks, 3, 1, 1, rng, 0.1);
  head_parse_ = ConvLayer::make(b, cfg.parse_classes, 3, 1, 1, rng, 0.1);
}

FacePriorNet::Output FacePriorNet::forward(const Var& hr) const {
  Var a = relu(c1_(hr));
  Var d = relu(c2_(a));
  d = relu(c3_(d));
  Var f = relu(c4_(concat_c(upsample_nearest2(d), a)));
  return Output{sigmoid(head_lm_(f)), softmax_c(head_parse_(f))};
}

void FacePriorNet::collect(std::vector<NamedParam>& out) const {
  c1_.collect("prior.c1", out);
  c2_.collect("prior.c2", out);
  c3_.collect("prior.c3", out);
  c4_.collect("prior.c4", out);
  head_lm_.collect("prior.head_lm", out);
  head_parse_.collect("prior.head_parse", out);
}

// ---- FcModule ----

FcModule::FcModule(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  if (cfg.fc_depth < 1 || cfg.fc_depth > 6)
    throw std::invalid_argument("FcModule: depth out of range");
  Rng rng(derive_key({seed, 0x6663ull}));
  const bool partial = cfg.fc_variant == FcVariant::kPartial;
  const int in0 = partial ? 3 : 4;  // plain variant takes the mask channel

  auto ch = [&](int i) { return cfg.fc_base_ch << std::min(i, 2); };

  int in = in0;
  for (int i = 0; i < cfg.fc_depth; ++i) {
    enc_.push_back(ConvLayer::make(in, ch(i), 3, 2, 1, rng));
    in = ch(i);
  }
  for (int i = 0; i < cfg.fc_depth; ++i) {
    const int level = cfg.fc_depth - 1 - i;  // skip level being joined
    const int skip_ch = level == 0 ? in0 : ch(level - 1);
    const int dec_out = level == 0 ? cfg.fc_base_ch : ch(level - 1);
    dec_.push_back(ConvLayer::make(in + skip_ch, dec_out, 3, 1, 1, rng));
    in = dec_out;
  }
  out_ = ConvLayer::make(in, 3, 3, 1, 1, rng, 0.1);
}

Var FcModule::forward(const Var& img_occ, const Tensor& mask) const {
  const Shape s = img_occ->value.shape;
  const int div = 1 << cfg_.fc_depth;
  if (s.h % div != 0 || s.w % div != 0 || s.h < div || s.w < div)
    throw std::invalid_argument("FcModule: input " + s.str() +
                                " not divisible by " + std::to_string(div));
  const bool partial = cfg_.fc_variant == FcVariant::kPartial;

  std::vector<Var> skips;
  std::vector<Tensor> masks;  // per level, partial variant only
  Var x;
  Tensor m = tile_mask(mask, s.n);
  if (partial) {
    x = img_occ;
  } else {
    x = concat_c(img_occ, constant(m));
  }
  skips.push_back(x);
  masks.push_back(m);

  for (const auto& layer : enc_) {
    if (partial) {
      Tensor mnext;
      x = relu(partial_conv2d(x, layer.w, layer.b, masks.back(), layer.stride,
                              layer.pad, &mnext));
      masks.push_back(std::move(mnext));
    } else {
      x = lrelu(layer(x));
    }
    skips.push_back(x);
  }

  Var d = skips.back();
  Tensor dm = partial ? masks.back() : Tensor();
  for (std::size_t i = 0; i < dec_.size(); ++i) {
    const std::size_t level = dec_.size() - 1 - i;
    d = concat_c(upsample_nearest2(d), skips[level]);
    if (partial) {
      dm = mask_union(mask_up2(dm), masks[level]);
      Tensor mnext;
      d = relu(partial_conv2d(d, dec_[i].w, dec_[i].b, dm, dec_[i].stride,
                              dec_[i].pad, &mnext));
      dm = std::move(mnext);
    } else {
      d = lrelu(dec_[i](d));
    }
  }
  return sigmoid(out_(d));
}

void FcModule::collect(std::vector<NamedParam>& out) const {
  for (std::size_t i = 0; i < enc_.size(); ++i)
    enc_[i].collect("fc.enc" + std::to_string(i), out);
  for (std::size_t i = 0; i < dec_.size(); ++i)
    dec_[i].collect("fc.dec" + std::to_string(i), out);
  out_.collect("fc.out", out);
}

// ---- SrModule ----

SrModule::SrModule(const ModelConfig& cfg, std::uint64_t seed) : cfg_(cfg) {
  if (cfg.scale != 2 && cfg.scale != 4 && cfg.scale != 8)
    throw std::invalid_argument("SrModule: scale must be 2, 4 or 8");
  Rng rng(derive_key({seed, 0x7372ull}));
  const int c = cfg.sr_base_ch;
  head_ = ConvLayer::make(3, c, 3, 1, 1, rng);
  for (int i = 0; i < cfg.sr_res_blocks; ++i)
    blocks_.emplace_back(ConvLayer::make(c, c, 3, 1, 1, rng),
                         ConvLayer::make(c, c, 3, 1, 1, rng));
  mid_ = ConvLayer::make(c, c, 3, 1, 1, rng);
  for (int i = 0; i < int_log2(cfg.scale); ++i)
    up_.push_back(ConvLayer::make(c, 4 * c, 3, 1, 1, rng));
  out_ = ConvLayer::make(c, 3, 3, 1, 1, rng, 0.1);
  if (cfg.sr_variant == SrVariant::kCoarseToFine) {
    const int rc = cfg.sr_refine_ch;
    ref1_ = ConvLayer::make(3 + cfg.landmarks + cfg.parse_classes, rc, 3, 1, 1,
                            rng);
    ref2_ = ConvLayer::make(rc, rc, 3, 1, 1, rng);
    ref_out_ = ConvLayer::make(rc, 3, 3, 1, 1, rng, 0.1);
  }
}

Var SrModule::forward(const Var& lr, const FacePriorNet* prior) const {
  Var h0 = relu(head_(lr));
  Var r = h0;
  for (const auto& [a, b] : blocks_) r = add(r, b(relu(a(r))));
  Var t = add(mid_(r), h0);
  for (const auto& u : up_) t = relu(pixel_shuffle(u(t), 2));
  Var pre = out_(t);
  Var coarse = sigmoid(pre);
  if (cfg_.sr_variant == SrVariant::kResidual) return coarse;

  if (!prior)
    throw std::invalid_argument(
        "SrModule: coarse-to-fine variant needs a face-prior network");
  FacePriorNet::Output p = prior->forward(coarse);
  Var f = concat_c(coarse, concat_c(p.heatmaps, p.parsing));
  Var x = relu(ref1_(f));
  x = relu(ref2_(x));
  return sigmoid(add(pre, ref_out_(x)));
}

void SrModule::collect(std::vector<NamedParam>& out) const {
  head_.collect("sr.head", out);
  for (std::size_t i = 0; i < blocks_.size(); ++i) {
    blocks_[i].first.collect("sr.block" + std::to_string(i) + "a", out);
    blocks_[i].second.collect("sr.block" + std::to_string(i) + "b", out);
  }
  mid_.collect("sr.mid", out);
  for (std::size_t i = 0; i < up_.size(); ++i)
    up_[i].collect("sr.up" + std::to_string(i), out);
  out_.collect("sr.out", out);
  if (cfg_.sr_variant == SrVariant::kCoarseToFine) {
    ref1_.collect("sr.ref1", out);
    ref2_.collect("sr.ref2", out);
    ref_out_.collect("sr.ref_out", out);
  }
}

// ---- PatchDiscriminator ----

PatchDiscriminator::PatchDiscriminator(const ModelConfig& cfg,
                                       std::uint64_t seed) {
  Rng rng(derive_key({seed, 0x64697363ull}));
  const int b = cfg.disc_base_ch;
  layers_.push_back(ConvLayer::make(3, b, 4, 2, 1, rng));
  layers_.push_back(ConvLayer::make(b, 2 * b, 4, 2, 1, rng));
  layers_.push_back(ConvLayer::make(2 * b, 4 * b, 3, 1, 1, rng));
  layers_.push_back(ConvLayer::make(4 * b, 1, 3, 1, 1, rng, 0.1));
}

Var PatchDiscriminator::forward(const Var& img) const {
  Var x = img;
  for (std::size_t i = 0; i + 1 < layers_.size(); ++i) x = lrelu(layers_[i](x));
  return sigmoid(layers_.back()(x));
}

void PatchDiscriminator::collect(std::vector<NamedParam>& out) const {
  for (std::size_t i = 0; i < layers_.size(); ++i)
    layers_[i].collect("disc.l" + std::to_string(i), out);
}

int PatchDiscriminator::receptive_field() const {
  int rf = 1, jump = 1;
  for (const auto& l : layers_) {
    rf += (l.w->value.shape.h - 1) * jump;
    jump *= l.stride;
  }
  return rf;
}

// ---- CompoundGenerator ----

CompoundGenerator::CompoundGenerator(const ModelConfig& cfg,
                                     std::uint64_t seed,
                                     std::shared_ptr<FacePriorNet> prior)
    : cfg_(cfg),
      fc_(cfg, derive_key({seed, 1})),
      sr_(cfg, derive_key({seed, 2})),
      prior_(std::move(prior)) {
  if (cfg.sr_variant == SrVariant::kCoarseToFine && !prior_)
    throw std::invalid_argument(
        "CompoundGenerator: coarse-to-fine upscaler needs a prior network");
}

CompoundGenerator::Output CompoundGenerator::forward(const Var& img_occ,
                                                     const Tensor& mask) const {
  Output o;
  o.raw_lr = fc_.forward(img_occ, mask);
  o.completed_lr = masked_blend(o.raw_lr, img_occ, mask);
  o.hr = sr_.forward(o.completed_lr, prior_.get());
  return o;
}

void CompoundGenerator::collect(std::vector<NamedParam>& out) const {
  fc_.collect(out);
  sr_.collect(out);
}

}  // namespace fr
