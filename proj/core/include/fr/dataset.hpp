#ifndef FR_DATASET_HPP_
#define FR_DATASET_HPP_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "fr/image.hpp"
#include "fr/occlusion.hpp"
#include "fr/tensor.hpp"

namespace fr {

// One paired training record. Landmark/parsing ground truth is empty for
// corpora without annotations; has_priors flags whether the face-prior
// term applies to the sample.
struct SampleRecord {
  Image hr_gt, lr_gt, lr_occ;
  Mask mask;
  Tensor landmarks_gt;  // (1, L, hr, hr) Gaussian heatmaps
  Tensor parsing_gt;    // (1, P, hr, hr) one-hot per pixel
  bool has_priors = false;
  std::string id;
};

struct SynthSpec {
  int count = 500;
  int hr_size = 64;  // training crop; the stored canvas is 9/8 of this
  std::uint64_t seed = 7;
};

// Draws `count` procedural face-like images (elliptical head, eye blobs,
// nose wedge, mouth bar) plus exact parsing maps and landmark centers.
// Deterministic per seed; output layout:
//   meta.json  images/NNNNNN.png  parsing/NNNNNN.png  landmarks/NNNNNN.json
void generate_synthetic_corpus(const SynthSpec& spec,
                               const std::string& out_dir);

// Landmark order used by the synthetic corpus.
inline constexpr int kSynthLandmarks = 5;   // eyeL eyeR nose mouthL mouthR
inline constexpr int kSynthClasses = 4;     // background skin eye mouth

// In-memory corpus. Samples are stored at canvas resolution; records crop
// to the training size, derive the LR pair and rasterize priors.
class Corpus {
 public:
  // reads a directory written by generate_synthetic_corpus
  static Corpus load(const std::string& dir);
  // plain folder of equal-sized PNGs, no annotations
  static Corpus from_folder(const std::string& dir);

  int size() const { return static_cast<int>(images_.size()); }
  int crop_size() const { return crop_; }
  int canvas_size() const { return canvas_; }
  bool has_priors() const { return priors_; }
  int landmarks() const { return landmarks_; }
  int parse_classes() const { return classes_; }
  const std::string& id() const { return id_; }
  const std::string& sample_id(int index) const { return ids_[index]; }

  std::vector<int> train_indices(double holdout_frac) const;
  std::vector<int> eval_indices(double holdout_frac) const;

  // mask dims must equal crop/scale; crop offsets in [0, canvas-crop]
  SampleRecord record(int index, ScaleFactor scale, const Mask& mask,
                      int crop_y, int crop_x, bool flip) const;
  // centered crop, no flip
  SampleRecord record_eval(int index, ScaleFactor scale,
                           const Mask& mask) const;

  int max_crop_offset() const { return canvas_ - crop_; }

 private:
  std::string id_;
  int canvas_ = 0, crop_ = 0;
  int landmarks_ = 0, classes_ = 0;
  bool priors_ = false;
  std::vector<Image> images_;
  std::vector<std::vector<std::uint8_t>> parse_idx_;
  std::vector<std::vector<std::pair<double, double>>> lm_centers_;  // (y,x)
  std::vector<std::string> ids_;
};

// Validates constructive record invariants over the whole corpus; returns
// human-readable violations (empty = valid).
std::vector<std::string> validate_corpus(const Corpus& corpus, int scale,
                                         std::uint64_t seed);

// Streaming ingestion: lazily yields records with freshly seeded masks per
// epoch. Iteration order is the corpus order within each epoch.
class RecordStream {
 public:
  RecordStream(Corpus corpus, ScaleFactor scale, double occlusion_frac,
               std::uint64_t seed);

  SampleRecord next();
  int epoch() const { return epoch_; }
  const Corpus& corpus() const { return corpus_; }

 private:
  Corpus corpus_;
  ScaleFactor scale_;
  double occlusion_frac_;
  std::uint64_t seed_;
  int epoch_ = 0, cursor_ = 0;
};

RecordStream ingest_folder(const std::string& dir, ScaleFactor scale,
                           double occlusion_frac, std::uint64_t seed);

}  // namespace fr

#endif  // FR_DATASET_HPP_
