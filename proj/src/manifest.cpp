#include "tgpet/manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>
#include <stdexcept>

#include "json.hpp"

#ifndef TGPET_VERSION
#define TGPET_VERSION "unknown"
#endif

namespace tgpet {

namespace {

class Sha256 {
 public:
  Sha256() : ctx_(EVP_MD_CTX_new(), EVP_MD_CTX_free) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_.get(), EVP_sha256(), nullptr) != 1)
      throw std::runtime_error("sha256: digest initialization failed");
  }
  void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx_.get(), data, n); }
  std::string hex() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_.get(), md.data(), &len);
    static const char* digits = "0123456789abcdef";
    std::string s;
    for (unsigned int i = 0; i < len; ++i) {
      s += digits[md[i] >> 4];
      s += digits[md[i] & 15];
    }
    return s;
  }

 private:
  std::unique_ptr<EVP_MD_CTX, void (*)(EVP_MD_CTX*)> ctx_;
};

std::string relative_to(const std::filesystem::path& p, const std::filesystem::path& base) {
  const auto rel = std::filesystem::relative(p, base);
  return !rel.empty() && *rel.begin() != ".." ? rel.generic_string() : p.generic_string();
}

}  // namespace

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "' for hashing");
  Sha256 h;
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    h.update(buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  return h.hex();
}

std::string sha256_text(const std::string& text) {
  Sha256 h;
  h.update(text.data(), text.size());
  return h.hex();
}

const char* build_version() { return TGPET_VERSION; }

void Manifest::write(const std::filesystem::path& out_dir) const {
  nlohmann::ordered_json j;
  j["command"] = command;
  j["version"] = build_version();
  j["config_sha256"] = config_hash;
  j["seed"] = seed;
  auto list = [&](const std::vector<std::filesystem::path>& files) {
    nlohmann::ordered_json arr = nlohmann::ordered_json::array();
    for (const auto& f : files) arr.push_back({{"path", relative_to(f, out_dir)}, {"sha256", sha256_file(f)}});
    return arr;
  };
  j["inputs"] = list(inputs);
  j["outputs"] = list(outputs);
  std::ofstream out(out_dir / ("manifest_" + command + ".json"));
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("cannot write manifest in '" + out_dir.string() + "'");
}

}  // namespace tgpet
