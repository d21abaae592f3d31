#include <bit>
#include <cstring>
#include <fstream>
#include <set>

#include "glpge/errors.hpp"
#include "glpge/pipeline.hpp"
#include "json.hpp"

namespace glpge {

using nlohmann::json;

static_assert(std::endian::native == std::endian::little, "checkpoint payload assumes a little-endian host");

namespace {

constexpr char kMagic[8] = {'G', 'L', 'P', 'G', 'E', 'C', 'K', 'P'};

template <typename T>
void put(std::vector<unsigned char>& out, T v) {
  const auto* p = reinterpret_cast<const unsigned char*>(&v);
  out.insert(out.end(), p, p + sizeof(T));
}

template <typename T>
T take(const std::vector<unsigned char>& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw FormatError("checkpoint: truncated header");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

template <typename Store>
void append_store(std::vector<CheckpointTensor>& out, const Store& store) {
  for (const auto& p : store.params()) {
    const auto s = p.tensor.shape();
    const auto d = p.tensor.data();
    out.push_back({p.name, {s.n, s.c, s.h, s.w}, std::vector<float>(d.begin(), d.end())});
  }
}

void fill_store(diff::ParamStore<float>& store, const std::map<std::string, const CheckpointTensor*>& by_name,
                std::set<std::string>& used) {
  for (auto& p : store.params()) {
    const auto it = by_name.find(p.name);
    if (it == by_name.end()) throw VersionError("checkpoint lacks parameter " + p.name);
    const CheckpointTensor& t = *it->second;
    const auto s = p.tensor.shape();
    if (t.shape != std::array<int, 4>{s.n, s.c, s.h, s.w})
      throw VersionError("checkpoint parameter " + p.name + " has shape " + std::to_string(t.shape[0]) + "x" +
                         std::to_string(t.shape[1]) + "x" + std::to_string(t.shape[2]) + "x" +
                         std::to_string(t.shape[3]) + ", model expects " + s.str());
    auto dst = p.tensor.mutable_data();
    std::copy(t.data.begin(), t.data.end(), dst.begin());
    used.insert(p.name);
  }
}

}  // namespace

bool Checkpoint::has(const std::string& prefix) const {
  for (const auto& t : tensors)
    if (t.name.rfind(prefix, 0) == 0) return true;
  return false;
}

std::vector<unsigned char> Checkpoint::to_bytes() const {
  json manifest;
  manifest["version"] = kVersion;
  manifest["phase"] = phase;
  manifest["step"] = step;
  manifest["config"] = json::parse(dump_config(config));
  manifest["config_hash"] = hex64(config_hash());
  manifest["tensors"] = json::array();
  std::uint64_t offset = 0;
  for (const auto& t : tensors) {
    const std::uint64_t length = t.data.size() * sizeof(float);
    manifest["tensors"].push_back({{"name", t.name}, {"shape", t.shape}, {"offset", offset}, {"length", length}});
    offset += length;
  }
  const std::string text = manifest.dump();
  std::vector<unsigned char> out(kMagic, kMagic + 8);
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, text.size());
  out.insert(out.end(), text.begin(), text.end());
  for (const auto& t : tensors) {
    const auto* p = reinterpret_cast<const unsigned char*>(t.data.data());
    out.insert(out.end(), p, p + t.data.size() * sizeof(float));
  }
  return out;
}

Checkpoint Checkpoint::from_bytes(const std::vector<unsigned char>& in) {
  if (in.size() < 20 || std::memcmp(in.data(), kMagic, 8) != 0) throw FormatError("checkpoint: bad magic");
  std::size_t pos = 8;
  const auto version = take<std::uint32_t>(in, pos);
  if (version != kVersion)
    throw VersionError("checkpoint version " + std::to_string(version) + " (expected " + std::to_string(kVersion) +
                       ")");
  const auto len = take<std::uint64_t>(in, pos);
  if (pos + len > in.size()) throw FormatError("checkpoint: truncated manifest");
  json manifest;
  try {
    manifest = json::parse(in.begin() + static_cast<std::ptrdiff_t>(pos),
                           in.begin() + static_cast<std::ptrdiff_t>(pos + len));
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: manifest is not valid JSON: ") + e.what());
  }
  pos += len;
  Checkpoint ck;
  std::size_t payload = 0;
  try {
    if (manifest.at("version").get<std::uint32_t>() != kVersion) throw VersionError("checkpoint: version mismatch");
    ck.phase = manifest.at("phase").get<std::string>();
    ck.step = manifest.at("step").get<std::int64_t>();
    ck.config = parse_config(manifest.at("config").dump());
    if (manifest.at("config_hash").get<std::string>() != hex64(ck.config_hash()))
      throw VersionError("checkpoint: config hash mismatch");
    for (const auto& t : manifest.at("tensors")) {
      CheckpointTensor ct;
      ct.name = t.at("name").get<std::string>();
      ct.shape = t.at("shape").get<std::array<int, 4>>();
      const auto offset = t.at("offset").get<std::uint64_t>();
      const auto length = t.at("length").get<std::uint64_t>();
      const std::uint64_t expect = static_cast<std::uint64_t>(ct.shape[0]) * ct.shape[1] * ct.shape[2] * ct.shape[3];
      if (length != expect * sizeof(float)) throw FormatError("checkpoint: tensor " + ct.name + " length does not match its shape");
      if (offset != payload) throw FormatError("checkpoint: tensor " + ct.name + " is not contiguous");
      if (pos + offset + length > in.size()) throw FormatError("checkpoint: payload truncated at " + ct.name);
      ct.data.resize(expect);
      std::memcpy(ct.data.data(), in.data() + pos + offset, length);
      payload += length;
      ck.tensors.push_back(std::move(ct));
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint: malformed manifest: ") + e.what());
  }
  if (pos + payload != in.size()) throw FormatError("checkpoint: trailing bytes after payload");
  return ck;
}

void Checkpoint::save(const std::filesystem::path& path) const {
  const auto bytes = to_bytes();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for checkpoint " + path.string());
}

Checkpoint Checkpoint::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw NotFound("checkpoint not found: " + path.string());
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_bytes(bytes);
}

Models::Models(const Config& cfg, bool with_local) : config(cfg), gpp(cfg.gppnet) {
  if (with_local) {
    dblr.emplace(cfg.dblrnet_config());
    disc.emplace(cfg.discriminator);
  }
}

Models Models::from_checkpoint(const Checkpoint& ckpt) {
  Models m(ckpt.config, ckpt.has("dblr."));
  if (!m.disc && ckpt.has("disc.")) m.disc.emplace(ckpt.config.discriminator);
  std::map<std::string, const CheckpointTensor*> by_name;
  for (const auto& t : ckpt.tensors) by_name[t.name] = &t;
  std::set<std::string> used;
  fill_store(m.gpp.store(), by_name, used);
  if (m.dblr) fill_store(m.dblr->store(), by_name, used);
  if (m.disc) fill_store(m.disc->store(), by_name, used);
  for (const auto& t : ckpt.tensors)
    if (used.count(t.name) == 0) throw VersionError("checkpoint has unexpected parameter " + t.name);
  return m;
}

Checkpoint Models::checkpoint(const std::string& phase, std::int64_t step) const {
  Checkpoint ck;
  ck.phase = phase;
  ck.step = step;
  ck.config = config;
  append_store(ck.tensors, gpp.store());
  if (dblr) append_store(ck.tensors, dblr->store());
  if (disc) append_store(ck.tensors, disc->store());
  return ck;
}

}  // namespace glpge
