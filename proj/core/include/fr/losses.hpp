#ifndef FR_LOSSES_HPP_
#define FR_LOSSES_HPP_

#include <string>
#include <utility>
#include <vector>

#include "fr/autograd.hpp"
#include "fr/features.hpp"

namespace fr {

// Balancing coefficients for the two composite losses plus the face-prior
// sub-weights. Defaults follow the training recipe: completion-stage
// weights (style 10, perceptual 0.1, pixel 0.1, smooth 1) and
// super-resolution-stage weights (adversarial 1e-3, face prior 1,
// perceptual 0.01, pixel 1, smooth 0.01).
struct LossWeights {
  double fc_style = 10.0;
  double fc_perceptual = 0.1;
  double fc_pixel = 0.1;
  double fc_smooth = 1.0;

  double sr_adv = 1e-3;
  double sr_face_prior = 1.0;
  double sr_perceptual = 0.01;
  double sr_pixel = 1.0;
  double sr_smooth = 0.01;

  double fp_alpha = 1.0;
  double fp_beta = 1.0;

  void validate() const;  // all weights must be non-negative
};

// Mean absolute difference over all elements.
Var pixel_loss(const Var& a, const Var& b);

// Per-level mean absolute feature difference, summed over pyramid levels.
Var perceptual_loss(const Var& pred, const Var& gt,
                    const FeatureExtractor& phi);

// Low-resolution variant: raw network output and masked-composited output
// are each compared against the ground truth and the two terms added.
Var perceptual_loss_pair(const Var& raw, const Var& composited, const Var& gt,
                         const FeatureExtractor& phi);

// L1 distance between normalized Gram matrices per level, for both the raw
// and the composited outputs against the ground truth.
Var style_loss(const Var& raw, const Var& composited, const Var& gt,
               const FeatureExtractor& phi);

// Anisotropic total variation (raw sum of interior first differences).
Var smooth_loss(const Var& img);

// Binary-cross-entropy discriminator loss over post-sigmoid score maps:
// -mean log(real) - mean log(1 - fake). Scores are clamped by 1e-7.
Var adversarial_d_loss(const Var& real_scores, const Var& fake_scores);

// Generator term. Non-saturating by default (-mean log(fake)); the strict
// minimax form mean log(1 - fake) is available by flag.
Var adversarial_g_loss(const Var& fake_scores, bool strict_minimax = false);

// alpha * MSE(landmark heatmaps) + beta * MSE(parsing maps).
Var face_prior_loss(const Var& pred_landmarks, const Var& gt_landmarks,
                    const Var& pred_parsing, const Var& gt_parsing,
                    double alpha, double beta);

struct FcTerms {
  Var style, perceptual, pixel, smooth;
};
struct SrTerms {
  Var adv, face_prior, perceptual, pixel, smooth;
};

Var l_fc(const FcTerms& t, const LossWeights& w);
Var l_sr(const SrTerms& t, const LossWeights& w);
Var l_total(const Var& fc, const Var& sr);

// One ordered scalar entry per active loss term plus composite totals.
struct LossReport {
  long long step = 0;
  std::string stage;
  std::vector<std::pair<std::string, double>> terms;

  void set(const std::string& name, double v) { terms.emplace_back(name, v); }
  double get(const std::string& name) const;
  bool operator==(const LossReport& o) const {
    return step == o.step && stage == o.stage && terms == o.terms;
  }
};

// single-line JSON object: {"step":..,"stage":..,<term>:..}
std::string to_json_line(const LossReport& r);

}  // namespace fr

#endif  // FR_LOSSES_HPP_
