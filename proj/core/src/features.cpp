#include "fr/features.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "fr/rng.hpp"

namespace fr {

namespace {

constexpr int kFeatFileVersion = 1;

Tensor quantize_f32(Tensor t) {
  for (double& x : t.v) x = static_cast<double>(static_cast<float>(x));
  return t;
}

}  // namespace

FeatureExtractor FeatureExtractor::make_default(std::uint64_t seed) {
  FeatureExtractor fe;
  const int chans[] = {3, 16, 32, 64};
  for (int l = 0; l < 3; ++l) {
    const int ic = chans[l], oc = chans[l + 1];
    Rng rng(derive_key({seed, static_cast<std::uint64_t>(l)}));
    const double std = std::sqrt(2.0 / (ic * 9.0));
    Level lvl;
    lvl.w = quantize_f32(Tensor::normal(Shape{oc, ic, 3, 3}, 0.0, std, rng));
    lvl.b = Tensor::zeros(Shape{1, oc, 1, 1});
    fe.levels_.push_back(std::move(lvl));
  }
  return fe;
}

FeaturePyramid FeatureExtractor::extract(const Var& img) const {
  const Shape s = img->value.shape;
  const int div = 1 << levels();
  if (s.h % div != 0 || s.w % div != 0)
    throw std::invalid_argument("FeatureExtractor: dims " + s.str() +
                                " not divisible by " + std::to_string(div));
  if (s.c != input_channels())
    throw std::invalid_argument("FeatureExtractor: expected " +
                                std::to_string(input_channels()) +
                                " channels, got " + std::to_string(s.c));
  FeaturePyramid maps;
  Var x = img;
  for (const Level& lvl : levels_) {
    Var y = relu(conv2d(x, constant(lvl.w), constant(lvl.b), 1, 1));
    x = avg_pool2(y);
    maps.push_back(x);
  }
  return maps;
}

std::vector<Tensor> FeatureExtractor::extract_values(const Tensor& img) const {
  FeaturePyramid maps = extract(constant(img));
  std::vector<Tensor> out;
  out.reserve(maps.size());
  for (const Var& m : maps) out.push_back(m->value);
  return out;
}

void FeatureExtractor::save(const std::string& path) const {
  nlohmann::json header;
  header["version"] = kFeatFileVersion;
  header["dtype"] = "f32";
  nlohmann::json layers = nlohmann::json::array();
  std::vector<std::pair<std::string, const Tensor*>> entries;
  for (std::size_t l = 0; l < levels_.size(); ++l) {
    entries.emplace_back("level" + std::to_string(l) + ".w", &levels_[l].w);
    entries.emplace_back("level" + std::to_string(l) + ".b", &levels_[l].b);
  }
  std::vector<const Tensor*> order;
  for (const auto& [name, t] : entries) {
    nlohmann::json e;
    e["name"] = name;
    e["shape"] = {t->shape.n, t->shape.c, t->shape.h, t->shape.w};
    layers.push_back(e);
    order.push_back(t);
  }
  header["layers"] = layers;
  const std::string hs = header.dump();

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("FeatureExtractor::save: cannot open " + path);
  const std::uint32_t hlen = static_cast<std::uint32_t>(hs.size());
  f.write(reinterpret_cast<const char*>(&hlen), 4);
  f.write(hs.data(), hs.size());
  for (const Tensor* t : order) {
    for (double v : t->v) {
      const float x = static_cast<float>(v);
      f.write(reinterpret_cast<const char*>(&x), 4);
    }
  }
  if (!f) throw std::runtime_error("FeatureExtractor::save: write failed: " + path);
}

FeatureExtractor FeatureExtractor::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("FeatureExtractor::load: cannot open " + path);
  std::uint32_t hlen = 0;
  f.read(reinterpret_cast<char*>(&hlen), 4);
  std::string hs(hlen, '\0');
  f.read(hs.data(), hlen);
  if (!f) throw std::runtime_error("FeatureExtractor::load: truncated header: " + path);

  nlohmann::json header = nlohmann::json::parse(hs, nullptr, false);
  if (header.is_discarded() || !header.contains("version"))
    throw std::runtime_error("FeatureExtractor::load: bad header in " + path);
  if (header["version"].get<int>() != kFeatFileVersion)
    throw std::runtime_error("FeatureExtractor::load: unsupported version " +
                             std::to_string(header["version"].get<int>()));

  FeatureExtractor fe;
  Level cur;
  bool have_w = false;
  for (const auto& e : header["layers"]) {
    const auto sh = e["shape"];
    Tensor t(Shape{sh[0].get<int>(), sh[1].get<int>(), sh[2].get<int>(),
                   sh[3].get<int>()});
    for (double& v : t.v) {
      float x = 0.0f;
      f.read(reinterpret_cast<char*>(&x), 4);
      v = static_cast<double>(x);
    }
    const std::string name = e["name"].get<std::string>();
    if (name.ends_with(".w")) {
      cur.w = std::move(t);
      have_w = true;
    } else if (name.ends_with(".b") && have_w) {
      cur.b = std::move(t);
      fe.levels_.push_back(std::move(cur));
      cur = Level{};
      have_w = false;
    } else {
      throw std::runtime_error("FeatureExtractor::load: unexpected entry " +
                               name);
    }
  }
  if (!f || fe.levels_.empty())
    throw std::runtime_error("FeatureExtractor::load: truncated payload: " +
                             path);
  return fe;
}

}  // namespace fr
