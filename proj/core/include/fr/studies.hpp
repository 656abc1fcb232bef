#ifndef FR_STUDIES_HPP_
#define FR_STUDIES_HPP_

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fr/dataset.hpp"
#include "fr/metrics.hpp"

namespace fr {

struct StudyRow {
  std::string condition;
  double psnr_mean = 0.0;
  double mssim_mean = 0.0;
  int n = 0;
  int psnr_inf_count = 0;  // identical pairs excluded from the PSNR mean
};

// Per-condition rows plus a mean +- population-std summary across rows.
struct StudyReport {
  std::string title;
  std::string dataset;
  std::vector<std::string> notes;
  std::vector<StudyRow> rows;
  bool has_summary = false;
  double psnr_mean = 0, psnr_std = 0, mssim_mean = 0, mssim_std = 0;

  void compute_summary();
  std::string to_json() const;
  std::string to_text() const;
  std::string to_csv() const;
};

using RecoverFn =
    std::function<Image(const Image& lr_occ, const Mask& mask)>;

// Mean metrics of `recover` over the held-out split with the given mask per
// sample (ordered, deterministic reduction).
StudyRow evaluate_condition(
    const std::string& name, const RecoverFn& recover, const Corpus& corpus,
    int scale, double holdout_frac,
    const std::function<Mask(int lr_h, int lr_w, int index)>& mask_for);

// One row per grid cell (row-major, 4 cells for grid 2, 9 for grid 3) plus
// the summary across cells.
StudyReport run_location_study(const RecoverFn& recover, const Corpus& corpus,
                               int scale, double holdout_frac, int grid);

// One row per block side length at the fixed center anchor; monotone axis.
StudyReport run_size_study(const RecoverFn& recover, const Corpus& corpus,
                           int scale, double holdout_frac,
                           const std::vector<int>& sizes);

struct BaselinePipelines {
  RecoverFn joint;
  // completion + composite at LR scale
  std::function<Image(const Image&, const Mask&)> complete_lr;
  // upscaling of a (possibly occluded) LR image
  std::function<Image(const Image&)> upscale;
  // completion applied at HR scale (mask upscaled nearest-neighbor)
  std::function<Image(const Image&, const Mask&)> complete_hr;
};

// Three conditions sharing identical inputs and masks: completion-then-
// upscaling, upscaling-then-completion, and the joint pipeline.
StudyReport run_baseline_comparison(const BaselinePipelines& p,
                                    const Corpus& corpus, int scale,
                                    double holdout_frac, double occl_frac,
                                    std::uint64_t seed);

// Standard occlusion protocol over a foreign corpus; the report carries the
// dataset identity.
StudyReport run_cross_dataset(const RecoverFn& recover, const Corpus& foreign,
                              int scale, double holdout_frac,
                              double occl_frac, std::uint64_t seed);

// Assembles named evaluation results (e.g. ablation conditions) into one
// report without a cross-row summary.
StudyReport assemble_condition_report(const std::string& title,
                                      const std::string& dataset,
                                      const std::vector<StudyRow>& rows);

}  // namespace fr

#endif  // FR_STUDIES_HPP_
