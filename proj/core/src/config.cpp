#include "fr/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fr {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& k, const std::string& v) {
  std::size_t pos = 0;
  double d;
  try {
    d = std::stod(v, &pos);
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad number for " + k + ": " + v);
  }
  if (pos != v.size())
    throw std::invalid_argument("config: bad number for " + k + ": " + v);
  return d;
}

int parse_int(const std::string& k, const std::string& v) {
  const double d = parse_double(k, v);
  const int i = static_cast<int>(d);
  if (d != i)
    throw std::invalid_argument("config: expected integer for " + k + ": " + v);
  return i;
}

std::uint64_t parse_u64(const std::string& k, const std::string& v) {
  try {
    std::size_t pos = 0;
    const std::uint64_t u = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return u;
  } catch (const std::exception&) {
    throw std::invalid_argument("config: bad unsigned for " + k + ": " + v);
  }
}

bool parse_bool(const std::string& k, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw std::invalid_argument("config: expected true/false for " + k + ": " +
                              v);
}

std::string unquote(const std::string& v) {
  if (v.size() >= 2 && ((v.front() == '"' && v.back() == '"') ||
                        (v.front() == '\'' && v.back() == '\'')))
    return v.substr(1, v.size() - 2);
  return v;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& raw) {
  const std::string v = unquote(raw);
  if (key == "data.dir") data_dir = v;
  else if (key == "data.eval_dir") eval_dir = v;
  else if (key == "data.holdout_frac") holdout_frac = parse_double(key, v);
  else if (key == "data.occlusion_frac") occlusion_frac = parse_double(key, v);
  else if (key == "data.hr_size") hr_size = parse_int(key, v);
  else if (key == "data.scale") scale = parse_int(key, v);
  else if (key == "model.fc") model.fc_variant = fc_variant_from_string(v);
  else if (key == "model.sr") model.sr_variant = sr_variant_from_string(v);
  else if (key == "model.fc_depth") model.fc_depth = parse_int(key, v);
  else if (key == "model.fc_base_ch") model.fc_base_ch = parse_int(key, v);
  else if (key == "model.sr_base_ch") model.sr_base_ch = parse_int(key, v);
  else if (key == "model.sr_res_blocks") model.sr_res_blocks = parse_int(key, v);
  else if (key == "model.sr_refine_ch") model.sr_refine_ch = parse_int(key, v);
  else if (key == "model.disc_base_ch") model.disc_base_ch = parse_int(key, v);
  else if (key == "model.prior_base_ch") model.prior_base_ch = parse_int(key, v);
  else if (key == "model.landmarks") model.landmarks = parse_int(key, v);
  else if (key == "model.parse_classes") model.parse_classes = parse_int(key, v);
  else if (key == "train.seed") seed = parse_u64(key, v);
  else if (key == "train.batch") batch = parse_int(key, v);
  else if (key == "train.lr") lr = parse_double(key, v);
  else if (key == "train.prior_steps") prior_steps = parse_int(key, v);
  else if (key == "train.stage1_steps") stage1_steps = parse_int(key, v);
  else if (key == "train.stage2_steps") stage2_steps = parse_int(key, v);
  else if (key == "train.warmup_frac") warmup_frac = parse_double(key, v);
  else if (key == "train.mode") mode = v;
  else if (key == "train.strict_minimax") strict_minimax = parse_bool(key, v);
  else if (key == "train.augment_flip") augment_flip = parse_bool(key, v);
  else if (key == "train.ckpt_interval") ckpt_interval = parse_int(key, v);
  else if (key == "loss.fc_style") weights.fc_style = parse_double(key, v);
  else if (key == "loss.fc_perceptual") weights.fc_perceptual = parse_double(key, v);
  else if (key == "loss.fc_pixel") weights.fc_pixel = parse_double(key, v);
  else if (key == "loss.fc_smooth") weights.fc_smooth = parse_double(key, v);
  else if (key == "loss.sr_adv") weights.sr_adv = parse_double(key, v);
  else if (key == "loss.sr_face_prior") weights.sr_face_prior = parse_double(key, v);
  else if (key == "loss.sr_perceptual") weights.sr_perceptual = parse_double(key, v);
  else if (key == "loss.sr_pixel") weights.sr_pixel = parse_double(key, v);
  else if (key == "loss.sr_smooth") weights.sr_smooth = parse_double(key, v);
  else if (key == "loss.fp_alpha") weights.fp_alpha = parse_double(key, v);
  else if (key == "loss.fp_beta") weights.fp_beta = parse_double(key, v);
  else if (key == "out.dir") out_dir = v;
  else if (key == "phi.weights") phi_weights = v;
  else
    throw std::invalid_argument("config: unknown key '" + key + "'");
}

void RunConfig::apply(
    const std::vector<std::pair<std::string, std::string>>& kv) {
  for (const auto& [k, v] : kv) set(k, v);
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("config: cannot open " + path);
  RunConfig cfg;
  std::string line;
  int lineno = 0;
  while (std::getline(f, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: " + path + ":" +
                                  std::to_string(lineno) +
                                  ": expected key = value");
    cfg.set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
  return cfg;
}

std::string RunConfig::dump() const {
  std::ostringstream o;
  o.precision(17);
  o << "data.dir = " << data_dir << "\n";
  o << "data.eval_dir = " << eval_dir << "\n";
  o << "data.holdout_frac = " << holdout_frac << "\n";
  o << "data.occlusion_frac = " << occlusion_frac << "\n";
  o << "data.hr_size = " << hr_size << "\n";
  o << "data.scale = " << scale << "\n";
  o << "model.fc = " << to_string(model.fc_variant) << "\n";
  o << "model.sr = " << to_string(model.sr_variant) << "\n";
  o << "model.fc_depth = " << model.fc_depth << "\n";
  o << "model.fc_base_ch = " << model.fc_base_ch << "\n";
  o << "model.sr_base_ch = " << model.sr_base_ch << "\n";
  o << "model.sr_res_blocks = " << model.sr_res_blocks << "\n";
  o << "model.sr_refine_ch = " << model.sr_refine_ch << "\n";
  o << "model.disc_base_ch = " << model.disc_base_ch << "\n";
  o << "model.prior_base_ch = " << model.prior_base_ch << "\n";
  o << "model.landmarks = " << model.landmarks << "\n";
  o << "model.parse_classes = " << model.parse_classes << "\n";
  o << "train.seed = " << seed << "\n";
  o << "train.batch = " << batch << "\n";
  o << "train.lr = " << lr << "\n";
  o << "train.prior_steps = " << prior_steps << "\n";
  o << "train.stage1_steps = " << stage1_steps << "\n";
  o << "train.stage2_steps = " << stage2_steps << "\n";
  o << "train.warmup_frac = " << warmup_frac << "\n";
  o << "train.mode = " << mode << "\n";
  o << "train.strict_minimax = " << (strict_minimax ? "true" : "false") << "\n";
  o << "train.augment_flip = " << (augment_flip ? "true" : "false") << "\n";
  o << "train.ckpt_interval = " << ckpt_interval << "\n";
  o << "loss.fc_style = " << weights.fc_style << "\n";
  o << "loss.fc_perceptual = " << weights.fc_perceptual << "\n";
  o << "loss.fc_pixel = " << weights.fc_pixel << "\n";
  o << "loss.fc_smooth = " << weights.fc_smooth << "\n";
  o << "loss.sr_adv = " << weights.sr_adv << "\n";
  o << "loss.sr_face_prior = " << weights.sr_face_prior << "\n";
  o << "loss.sr_perceptual = " << weights.sr_perceptual << "\n";
  o << "loss.sr_pixel = " << weights.sr_pixel << "\n";
  o << "loss.sr_smooth = " << weights.sr_smooth << "\n";
  o << "loss.fp_alpha = " << weights.fp_alpha << "\n";
  o << "loss.fp_beta = " << weights.fp_beta << "\n";
  o << "out.dir = " << out_dir << "\n";
  o << "phi.weights = " << phi_weights << "\n";
  return o.str();
}

void RunConfig::finalize() {
  if (scale != 2 && scale != 4 && scale != 8)
    throw std::invalid_argument("config: data.scale must be 2, 4 or 8");
  model.scale = scale;
  if (hr_size < 16 || hr_size % scale != 0)
    throw std::invalid_argument("config: data.hr_size must be a multiple of "
                                "the scale factor and at least 16");
  const int lrs = lr_size();
  if (lrs % 8 != 0)
    throw std::invalid_argument(
        "config: derived input size " + std::to_string(lrs) +
        " must be divisible by 8 (feature pyramid depth)");
  // clamp completion depth so the bottleneck stays at least 1x1
  int max_depth = 0;
  while ((1 << (max_depth + 1)) <= lrs) ++max_depth;
  if (model.fc_depth > max_depth) model.fc_depth = max_depth;

  if (hr_size < 11)
    throw std::invalid_argument("config: hr size below the SSIM window");
  if (batch < 1) throw std::invalid_argument("config: train.batch must be >= 1");
  if (!(lr > 0.0)) throw std::invalid_argument("config: train.lr must be > 0");
  if (prior_steps < 0 || stage1_steps < 0 || stage2_steps < 0)
    throw std::invalid_argument("config: step counts must be >= 0");
  if (!(warmup_frac >= 0.0 && warmup_frac <= 1.0))
    throw std::invalid_argument("config: train.warmup_frac must be in [0,1]");
  if (!(holdout_frac > 0.0 && holdout_frac < 1.0))
    throw std::invalid_argument("config: data.holdout_frac must be in (0,1)");
  if (!(occlusion_frac > 0.0 && occlusion_frac <= 1.0))
    throw std::invalid_argument("config: data.occlusion_frac must be in (0,1]");
  if (mode != "full" && mode != "fc_only" && mode != "sr_only" &&
      mode != "joint_single" && mode != "stage2_only")
    throw std::invalid_argument("config: unknown train.mode '" + mode + "'");
  weights.validate();
}

std::string resolve_out_path(const std::string& path) {
  if (path.empty() || path.front() == '/') return path;
  const char* root = std::getenv("FACERESTORE_OUT_ROOT");
  if (!root || !*root) return path;
  std::string r(root);
  if (r.back() != '/') r += '/';
  return r + path;
}

}  // namespace fr
