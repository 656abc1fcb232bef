#include "fr/checkpoint.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace fr {

namespace {
constexpr char kMagic[8] = {'F', 'R', 'C', 'K', 'P', 'T', '0', '\n'};
}

const Tensor* Checkpoint::find(const std::string& name) const {
  for (const auto& [k, t] : tensors)
    if (k == name) return &t;
  return nullptr;
}

long long Checkpoint::counter(const std::string& name,
                              long long fallback) const {
  for (const auto& [k, v] : counters)
    if (k == name) return v;
  return fallback;
}

void save_checkpoint(const Checkpoint& c, const std::string& path) {
  nlohmann::ordered_json h;
  h["version"] = c.version;
  h["arch"] = c.arch_json;
  h["stage"] = c.stage;
  h["step"] = c.step;
  h["seed"] = c.seed;
  // sorted so a save -> load -> save round trip is byte-stable
  auto sorted_counters = c.counters;
  std::sort(sorted_counters.begin(), sorted_counters.end());
  nlohmann::ordered_json counters = nlohmann::ordered_json::object();
  for (const auto& [k, v] : sorted_counters) counters[k] = v;
  h["counters"] = counters;
  nlohmann::ordered_json dir = nlohmann::ordered_json::array();
  for (const auto& [name, t] : c.tensors) {
    nlohmann::ordered_json e;
    e["name"] = name;
    e["shape"] = {t.shape.n, t.shape.c, t.shape.h, t.shape.w};
    dir.push_back(e);
  }
  h["tensors"] = dir;
  const std::string hs = h.dump();

  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("save_checkpoint: cannot open " + tmp);
    f.write(kMagic, sizeof(kMagic));
    const std::uint64_t hlen = hs.size();
    f.write(reinterpret_cast<const char*>(&hlen), 8);
    f.write(hs.data(), hs.size());
    for (const auto& [name, t] : c.tensors)
      f.write(reinterpret_cast<const char*>(t.data()),
              static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!f) throw std::runtime_error("save_checkpoint: write failed: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("save_checkpoint: rename to " + path + " failed");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("load_checkpoint: cannot open " + path);
  char magic[8];
  f.read(magic, 8);
  if (!f || std::string(magic, 8) != std::string(kMagic, 8))
    throw std::runtime_error("load_checkpoint: " + path +
                             " is not a checkpoint file");
  std::uint64_t hlen = 0;
  f.read(reinterpret_cast<char*>(&hlen), 8);
  if (!f || hlen == 0 || hlen > (1ull << 30))
    throw std::runtime_error("load_checkpoint: corrupt header length in " +
                             path);
  std::string hs(hlen, '\0');
  f.read(hs.data(), static_cast<std::streamsize>(hlen));
  if (!f)
    throw std::runtime_error("load_checkpoint: truncated header in " + path);

  nlohmann::json h = nlohmann::json::parse(hs, nullptr, false);
  if (h.is_discarded() || !h.contains("version"))
    throw std::runtime_error("load_checkpoint: corrupt header in " + path);
  Checkpoint c;
  c.version = h["version"].get<int>();
  if (c.version != Checkpoint::kVersion)
    throw std::runtime_error(
        "load_checkpoint: incompatible version " + std::to_string(c.version) +
        " (expected " + std::to_string(Checkpoint::kVersion) + ") in " + path);
  c.arch_json = h.at("arch").get<std::string>();
  c.stage = h.at("stage").get<std::string>();
  c.step = h.at("step").get<long long>();
  c.seed = h.at("seed").get<std::uint64_t>();
  for (const auto& [k, v] : h.at("counters").items())
    c.counters.emplace_back(k, v.get<long long>());
  for (const auto& e : h.at("tensors")) {
    const auto sh = e.at("shape");
    Tensor t(Shape{sh[0].get<int>(), sh[1].get<int>(), sh[2].get<int>(),
                   sh[3].get<int>()});
    f.read(reinterpret_cast<char*>(t.data()),
           static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!f)
      throw std::runtime_error("load_checkpoint: truncated payload in " +
                               path);
    c.tensors.emplace_back(e.at("name").get<std::string>(), std::move(t));
  }
  return c;
}

}  // namespace fr
