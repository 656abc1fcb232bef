#include "fr/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "fr/rng.hpp"

namespace fs = std::filesystem;

namespace fr {

namespace {

constexpr int kCorpusVersion = 1;

std::string sample_name(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%06d", i);
  return buf;
}

struct FaceSketch {
  Image img;
  std::vector<std::uint8_t> parse;               // class index per pixel
  std::vector<std::pair<double, double>> marks;  // (y,x)
};

// Procedural face: background gradient, elliptical head, two eye blobs,
// nose wedge (skin class), mouth bar. The parsing map is assigned by the
// same membership tests that paint the pixels.
FaceSketch draw_face(int size, Rng& rng) {
  FaceSketch out;
  out.img = Image(3, size, size);
  out.parse.assign(static_cast<std::size_t>(size) * size, 0);

  const double s = size;
  double bg0[3], bg1[3];
  for (int c = 0; c < 3; ++c) {
    bg0[c] = rng.uniform(0.1, 0.9);
    bg1[c] = rng.uniform(0.1, 0.9);
  }

  const double cy = s * rng.uniform(0.50, 0.56);
  const double cx = s * rng.uniform(0.46, 0.54);
  const double rx = s * rng.uniform(0.28, 0.36);
  const double ry = s * rng.uniform(0.34, 0.42);
  const double skin_r = rng.uniform(0.55, 0.85);
  const double skin_g = skin_r * rng.uniform(0.75, 0.9);
  const double skin_b = skin_g * rng.uniform(0.75, 0.9);

  const double eye_dy = ry * rng.uniform(0.30, 0.42);
  const double eye_dx = rx * rng.uniform(0.38, 0.52);
  const double eye_r = s * rng.uniform(0.035, 0.055);
  const double eye_tone = rng.uniform(0.05, 0.30);
  const double eye_b = std::min(1.0, eye_tone + rng.uniform(0.0, 0.25));

  const double nose_top = cy - ry * 0.10;
  const double nose_len = ry * rng.uniform(0.30, 0.42);
  const double nose_w = rx * rng.uniform(0.16, 0.24);

  const double mouth_cy = cy + ry * rng.uniform(0.52, 0.62);
  const double mouth_hw = rx * rng.uniform(0.32, 0.46);
  const double mouth_hh = s * rng.uniform(0.018, 0.034);
  const double mouth_r = rng.uniform(0.5, 0.8);

  const double eyeL_x = cx - eye_dx, eyeR_x = cx + eye_dx;
  const double eye_y = cy - eye_dy;

  for (int y = 0; y < size; ++y) {
    const double t = y / (s - 1.0);
    for (int x = 0; x < size; ++x) {
      double r = bg0[0] + (bg1[0] - bg0[0]) * t;
      double g = bg0[1] + (bg1[1] - bg0[1]) * t;
      double b = bg0[2] + (bg1[2] - bg0[2]) * t;
      std::uint8_t cls = 0;

      const double hx = (x - cx) / rx, hy = (y - cy) / ry;
      if (hx * hx + hy * hy <= 1.0) {
        r = skin_r;
        g = skin_g;
        b = skin_b;
        cls = 1;
        // nose wedge, painted as darker skin
        if (y >= nose_top && y <= nose_top + nose_len) {
          const double prog = (y - nose_top) / nose_len;
          if (std::abs(x - cx) <= 0.5 * nose_w * prog) {
            r = skin_r * 0.85;
            g = skin_g * 0.85;
            b = skin_b * 0.85;
          }
        }
        const double dl = (x - eyeL_x) * (x - eyeL_x) +
                          (y - eye_y) * (y - eye_y);
        const double dr = (x - eyeR_x) * (x - eyeR_x) +
                          (y - eye_y) * (y - eye_y);
        if (dl <= eye_r * eye_r || dr <= eye_r * eye_r) {
          r = eye_tone;
          g = eye_tone;
          b = eye_b;
          cls = 2;
        }
        const double mx = (x - cx) / mouth_hw;
        const double my = (y - mouth_cy) / mouth_hh;
        if (mx * mx + my * my <= 1.0) {
          r = mouth_r;
          g = mouth_r * 0.3;
          b = mouth_r * 0.35;
          cls = 3;
        }
      }
      out.img.at(0, y, x) = std::clamp(r, 0.0, 1.0);
      out.img.at(1, y, x) = std::clamp(g, 0.0, 1.0);
      out.img.at(2, y, x) = std::clamp(b, 0.0, 1.0);
      out.parse[static_cast<std::size_t>(y) * size + x] = cls;
    }
  }

  out.marks = {{eye_y, eyeL_x},
               {eye_y, eyeR_x},
               {nose_top + nose_len, cx},
               {mouth_cy, cx - mouth_hw},
               {mouth_cy, cx + mouth_hw}};
  return out;
}

}  // namespace

void generate_synthetic_corpus(const SynthSpec& spec,
                               const std::string& out_dir) {
  if (spec.count < 1)
    throw std::invalid_argument("generate_synthetic_corpus: count must be >= 1");
  if (spec.hr_size < 16 || spec.hr_size % 8 != 0)
    throw std::invalid_argument(
        "generate_synthetic_corpus: hr_size must be >= 16 and divisible by 8");
  const int canvas = spec.hr_size + spec.hr_size / 8;

  fs::create_directories(fs::path(out_dir) / "images");
  fs::create_directories(fs::path(out_dir) / "parsing");
  fs::create_directories(fs::path(out_dir) / "landmarks");

  for (int i = 0; i < spec.count; ++i) {
    Rng rng(derive_key({spec.seed, static_cast<std::uint64_t>(i), 0xfacell}));
    FaceSketch fsk = draw_face(canvas, rng);
    const std::string name = sample_name(i);
    save_png(fsk.img, (fs::path(out_dir) / "images" / (name + ".png")).string());

    Image pm(1, canvas, canvas);
    for (std::size_t p = 0; p < fsk.parse.size(); ++p)
      pm.px[p] = fsk.parse[p] / 255.0;  // class index stored raw in 8-bit
    save_png(pm, (fs::path(out_dir) / "parsing" / (name + ".png")).string());

    nlohmann::json lm = nlohmann::json::array();
    for (const auto& [y, x] : fsk.marks) lm.push_back({y, x});
    std::ofstream lf((fs::path(out_dir) / "landmarks" / (name + ".json")));
    lf << lm.dump() << "\n";
  }

  nlohmann::json meta;
  meta["version"] = kCorpusVersion;
  meta["count"] = spec.count;
  meta["canvas"] = canvas;
  meta["crop"] = spec.hr_size;
  meta["seed"] = spec.seed;
  meta["landmarks"] = kSynthLandmarks;
  meta["parse_classes"] = kSynthClasses;
  meta["landmark_names"] = {"eye_l", "eye_r", "nose", "mouth_l", "mouth_r"};
  std::ofstream mf(fs::path(out_dir) / "meta.json");
  mf << meta.dump(2) << "\n";
  if (!mf) throw std::runtime_error("generate_synthetic_corpus: write failed");
}

Corpus Corpus::load(const std::string& dir) {
  std::ifstream mf(fs::path(dir) / "meta.json");
  if (!mf)
    throw std::runtime_error("Corpus::load: missing meta.json in " + dir);
  nlohmann::json meta = nlohmann::json::parse(mf, nullptr, false);
  if (meta.is_discarded())
    throw std::runtime_error("Corpus::load: corrupt meta.json in " + dir);
  if (meta.at("version").get<int>() != kCorpusVersion)
    throw std::runtime_error("Corpus::load: unsupported corpus version");

  Corpus c;
  c.id_ = fs::path(dir).filename().string();
  c.canvas_ = meta.at("canvas").get<int>();
  c.crop_ = meta.at("crop").get<int>();
  c.landmarks_ = meta.at("landmarks").get<int>();
  c.classes_ = meta.at("parse_classes").get<int>();
  c.priors_ = true;
  const int count = meta.at("count").get<int>();
  c.images_.reserve(count);

  for (int i = 0; i < count; ++i) {
    const std::string name = sample_name(i);
    Image img =
        load_png((fs::path(dir) / "images" / (name + ".png")).string());
    if (img.height != c.canvas_ || img.width != c.canvas_ || img.channels != 3)
      throw std::runtime_error("Corpus::load: sample " + name +
                               " has unexpected dims");
    Image pm =
        load_png((fs::path(dir) / "parsing" / (name + ".png")).string());
    std::vector<std::uint8_t> pidx(pm.px.size());
    for (std::size_t p = 0; p < pm.px.size(); ++p) {
      const int cls = static_cast<int>(std::lround(pm.px[p] * 255.0));
      if (cls < 0 || cls >= c.classes_)
        throw std::runtime_error("Corpus::load: parsing class out of range in " +
                                 name);
      pidx[p] = static_cast<std::uint8_t>(cls);
    }
    std::ifstream lf(fs::path(dir) / "landmarks" / (name + ".json"));
    nlohmann::json lm = nlohmann::json::parse(lf, nullptr, false);
    if (lm.is_discarded() || static_cast<int>(lm.size()) != c.landmarks_)
      throw std::runtime_error("Corpus::load: bad landmarks for " + name);
    std::vector<std::pair<double, double>> marks;
    for (const auto& e : lm)
      marks.emplace_back(e[0].get<double>(), e[1].get<double>());

    c.images_.push_back(std::move(img));
    c.parse_idx_.push_back(std::move(pidx));
    c.lm_centers_.push_back(std::move(marks));
    c.ids_.push_back(name);
  }
  return c;
}

Corpus Corpus::from_folder(const std::string& dir) {
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file() && e.path().extension() == ".png")
      files.push_back(e.path().string());
  std::sort(files.begin(), files.end());
  if (files.empty())
    throw std::runtime_error("Corpus::from_folder: no PNG files in " + dir);

  Corpus c;
  c.id_ = fs::path(dir).filename().string();
  c.priors_ = false;
  std::vector<std::string> offenders;
  for (const auto& f : files) {
    Image img = load_png(f);
    if (img.channels == 1) {
      // promote gray to RGB so the pipeline sees one layout
      Image rgb(3, img.height, img.width);
      for (int ch = 0; ch < 3; ++ch)
        std::copy(img.px.begin(), img.px.end(),
                  rgb.px.begin() + static_cast<std::size_t>(ch) * img.height *
                                       img.width);
      img = std::move(rgb);
    }
    if (c.images_.empty()) {
      c.canvas_ = img.height;
      c.crop_ = img.height;
    }
    if (img.height != c.canvas_ || img.width != c.canvas_) {
      offenders.push_back(fs::path(f).filename().string());
      continue;
    }
    c.images_.push_back(std::move(img));
    c.parse_idx_.emplace_back();
    c.lm_centers_.emplace_back();
    c.ids_.push_back(fs::path(f).stem().string());
  }
  if (!offenders.empty()) {
    std::string msg = "Corpus::from_folder: mixed image sizes; offenders:";
    for (const auto& o : offenders) msg += " " + o;
    throw std::runtime_error(msg);
  }
  return c;
}

std::vector<int> Corpus::train_indices(double holdout_frac) const {
  const int held = std::max(1, static_cast<int>(size() * holdout_frac));
  std::vector<int> idx;
  for (int i = 0; i + held < size(); ++i) idx.push_back(i);
  if (idx.empty())
    throw std::runtime_error("Corpus: holdout leaves no training samples");
  return idx;
}

std::vector<int> Corpus::eval_indices(double holdout_frac) const {
  const int held = std::max(1, static_cast<int>(size() * holdout_frac));
  std::vector<int> idx;
  for (int i = std::max(0, size() - held); i < size(); ++i) idx.push_back(i);
  return idx;
}

SampleRecord Corpus::record(int index, ScaleFactor scale, const Mask& mask,
                            int crop_y, int crop_x, bool flip) const {
  if (index < 0 || index >= size())
    throw std::invalid_argument("Corpus::record: index out of range");
  if (crop_y < 0 || crop_x < 0 || crop_y > max_crop_offset() ||
      crop_x > max_crop_offset())
    throw std::invalid_argument("Corpus::record: crop offset out of range");

  const Image& canvas = images_[index];
  SampleRecord r;
  r.id = ids_[index];

  Image hr(3, crop_, crop_);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < crop_; ++y)
      for (int x = 0; x < crop_; ++x) {
        const int sx = flip ? crop_ - 1 - x : x;
        hr.at(c, y, x) = canvas.at(c, crop_y + y, crop_x + sx);
      }
  r.hr_gt = std::move(hr);
  r.lr_gt = downsample(r.hr_gt, scale);
  if (mask.height != r.lr_gt.height || mask.width != r.lr_gt.width)
    throw std::invalid_argument("Corpus::record: mask dims do not match LR");
  r.mask = mask;
  r.lr_occ = apply_occlusion(r.lr_gt, mask);

  if (priors_) {
    r.has_priors = true;
    // one-hot parsing at crop resolution
    r.parsing_gt = Tensor::zeros(Shape{1, classes_, crop_, crop_});
    const auto& pidx = parse_idx_[index];
    for (int y = 0; y < crop_; ++y)
      for (int x = 0; x < crop_; ++x) {
        const int sx = flip ? crop_ - 1 - x : x;
        const int cls =
            pidx[static_cast<std::size_t>(crop_y + y) * canvas_ + crop_x + sx];
        r.parsing_gt.at(0, cls, y, x) = 1.0;
      }
    // Gaussian heatmaps; left/right channel pairs swap under flips
    r.landmarks_gt = Tensor::zeros(Shape{1, landmarks_, crop_, crop_});
    const double sigma = crop_ / 32.0;
    for (int l = 0; l < landmarks_; ++l) {
      int src = l;
      if (flip) {
        if (l == 0) src = 1;
        else if (l == 1) src = 0;
        else if (l == 3) src = 4;
        else if (l == 4) src = 3;
      }
      const double my = lm_centers_[index][src].first - crop_y;
      double mx = lm_centers_[index][src].second - crop_x;
      if (flip) mx = crop_ - 1 - mx;
      for (int y = 0; y < crop_; ++y)
        for (int x = 0; x < crop_; ++x) {
          const double d2 = (y - my) * (y - my) + (x - mx) * (x - mx);
          r.landmarks_gt.at(0, l, y, x) =
              std::exp(-d2 / (2.0 * sigma * sigma));
        }
    }
  }
  return r;
}

SampleRecord Corpus::record_eval(int index, ScaleFactor scale,
                                 const Mask& mask) const {
  const int off = max_crop_offset() / 2;
  return record(index, scale, mask, off, off, false);
}

std::vector<std::string> validate_corpus(const Corpus& corpus, int scale,
                                         std::uint64_t seed) {
  std::vector<std::string> problems;
  const ScaleFactor sf(scale);
  const int lrs = corpus.crop_size() / scale;
  for (int i = 0; i < corpus.size(); ++i) {
    Mask m = random_block_mask(lrs, lrs, 0.25,
                               derive_key({seed, static_cast<std::uint64_t>(i)}));
    SampleRecord r = corpus.record_eval(i, sf, m);
    const std::string tag = "sample " + r.id + ": ";

    Image down = downsample(r.hr_gt, sf);
    for (std::size_t p = 0; p < down.px.size(); ++p)
      if (down.px[p] != r.lr_gt.px[p]) {
        problems.push_back(tag + "lr_gt is not the box-downsampled hr_gt");
        break;
      }
    Image occ = apply_occlusion(r.lr_gt, r.mask);
    for (std::size_t p = 0; p < occ.px.size(); ++p)
      if (occ.px[p] != r.lr_occ.px[p]) {
        problems.push_back(tag + "lr_occ does not match mask application");
        break;
      }
    if (r.has_priors) {
      const Shape ps = r.parsing_gt.shape;
      bool onehot = true;
      for (int y = 0; y < ps.h && onehot; ++y)
        for (int x = 0; x < ps.w && onehot; ++x) {
          double sum = 0.0;
          for (int c = 0; c < ps.c; ++c) {
            const double v = r.parsing_gt.at(0, c, y, x);
            if (v != 0.0 && v != 1.0) onehot = false;
            sum += v;
          }
          if (sum != 1.0) onehot = false;
        }
      if (!onehot) problems.push_back(tag + "parsing map is not one-hot");
      if (!r.landmarks_gt.all_finite() || r.landmarks_gt.max() > 1.0 ||
          r.landmarks_gt.min() < 0.0)
        problems.push_back(tag + "landmark heatmaps out of range");
    }
  }
  return problems;
}

RecordStream::RecordStream(Corpus corpus, ScaleFactor scale,
                           double occlusion_frac, std::uint64_t seed)
    : corpus_(std::move(corpus)),
      scale_(scale),
      occlusion_frac_(occlusion_frac),
      seed_(seed) {}

SampleRecord RecordStream::next() {
  if (cursor_ >= corpus_.size()) {
    cursor_ = 0;
    ++epoch_;
  }
  const int i = cursor_++;
  const int lrs = corpus_.crop_size() / scale_.factor;
  Mask m = random_block_mask(
      lrs, lrs, occlusion_frac_,
      derive_key({seed_, static_cast<std::uint64_t>(epoch_),
                  static_cast<std::uint64_t>(i), 0x6d61736bull}));
  return corpus_.record_eval(i, scale_, m);
}

RecordStream ingest_folder(const std::string& dir, ScaleFactor scale,
                           double occlusion_frac, std::uint64_t seed) {
  return RecordStream(Corpus::from_folder(dir), scale, occlusion_frac, seed);
}

}  // namespace fr
