#include "fr/losses.hpp"

#include <stdexcept>

#include <json.hpp>

namespace fr {

void LossWeights::validate() const {
  const double all[] = {fc_style, fc_perceptual, fc_pixel,  fc_smooth,
                        sr_adv,   sr_face_prior, sr_perceptual, sr_pixel,
                        sr_smooth, fp_alpha,     fp_beta};
  for (double w : all)
    if (!(w >= 0.0))
      throw std::invalid_argument("LossWeights: negative weight");
}

Var pixel_loss(const Var& a, const Var& b) { return mean_abs_diff(a, b); }

Var perceptual_loss(const Var& pred, const Var& gt,
                    const FeatureExtractor& phi) {
  FeaturePyramid fp = phi.extract(pred);
  FeaturePyramid fg = phi.extract(gt);
  std::vector<std::pair<double, Var>> terms;
  for (std::size_t l = 0; l < fp.size(); ++l)
    terms.emplace_back(1.0, mean_abs_diff(fp[l], fg[l]));
  return weighted_sum(terms);
}

Var perceptual_loss_pair(const Var& raw, const Var& composited, const Var& gt,
                         const FeatureExtractor& phi) {
  return add(perceptual_loss(raw, gt, phi),
             perceptual_loss(composited, gt, phi));
}

Var style_loss(const Var& raw, const Var& composited, const Var& gt,
               const FeatureExtractor& phi) {
  FeaturePyramid fr_ = phi.extract(raw);
  FeaturePyramid fc_ = phi.extract(composited);
  FeaturePyramid fg_ = phi.extract(gt);
  std::vector<std::pair<double, Var>> terms;
  for (std::size_t l = 0; l < fg_.size(); ++l) {
    Var gg = gram(fg_[l]);
    terms.emplace_back(1.0, sum_abs_diff(gram(fr_[l]), gg));
    terms.emplace_back(1.0, sum_abs_diff(gram(fc_[l]), gg));
  }
  return weighted_sum(terms);
}

Var smooth_loss(const Var& img) { return tv_sum(img); }

Var adversarial_d_loss(const Var& real_scores, const Var& fake_scores) {
  return weighted_sum({{-1.0, mean_log(real_scores)},
                       {-1.0, mean_log_one_minus(fake_scores)}});
}

Var adversarial_g_loss(const Var& fake_scores, bool strict_minimax) {
  if (strict_minimax) return mean_log_one_minus(fake_scores);
  return scale(mean_log(fake_scores), -1.0);
}

Var face_prior_loss(const Var& pred_landmarks, const Var& gt_landmarks,
                    const Var& pred_parsing, const Var& gt_parsing,
                    double alpha, double beta) {
  return weighted_sum(
      {{alpha, mean_sq_diff(pred_landmarks, gt_landmarks)},
       {beta, mean_sq_diff(pred_parsing, gt_parsing)}});
}

Var l_fc(const FcTerms& t, const LossWeights& w) {
  return weighted_sum({{w.fc_style, t.style},
                       {w.fc_perceptual, t.perceptual},
                       {w.fc_pixel, t.pixel},
                       {w.fc_smooth, t.smooth}});
}

Var l_sr(const SrTerms& t, const LossWeights& w) {
  return weighted_sum({{w.sr_adv, t.adv},
                       {w.sr_face_prior, t.face_prior},
                       {w.sr_perceptual, t.perceptual},
                       {w.sr_pixel, t.pixel},
                       {w.sr_smooth, t.smooth}});
}

Var l_total(const Var& fc, const Var& sr) { return add(fc, sr); }

double LossReport::get(const std::string& name) const {
  for (const auto& [k, v] : terms)
    if (k == name) return v;
  throw std::out_of_range("LossReport: no term named " + name);
}

std::string to_json_line(const LossReport& r) {
  nlohmann::ordered_json j;
  j["step"] = r.step;
  j["stage"] = r.stage;
  for (const auto& [k, v] : r.terms) j[k] = v;
  return j.dump();
}

}  // namespace fr
