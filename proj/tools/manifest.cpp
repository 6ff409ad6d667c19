#include "manifest.hpp"

#include <openssl/evp.h>

#include <array>
#include <fstream>
#include <memory>
#include <stdexcept>

namespace idtrack::cli {

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) throw std::runtime_error("sha256 init failed");
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx.get(), md.data(), &len);
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xf]);
  }
  return out;
}

RunManifest::RunManifest(std::string command) {
  doc_ = {{"tool", "idtrack"},
          {"version", kToolVersion},
          {"command", std::move(command)},
          {"flags", nlohmann::json::object()},
          {"inputs", nlohmann::json::object()},
          {"outputs", nlohmann::json::object()},
          {"timings_sec", nlohmann::json::object()}};
}

void RunManifest::input(const std::filesystem::path& path) { doc_["inputs"][path.string()] = sha256_file(path); }

void RunManifest::output(const std::filesystem::path& path) {
  doc_["outputs"][path.filename().string()] = sha256_file(path);
}

void RunManifest::timings(const std::map<std::string, double>& seconds) {
  for (const auto& [stage, s] : seconds) doc_["timings_sec"][stage] = s;
}

void RunManifest::write(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << doc_.dump(2) << '\n';
}

}  // namespace idtrack::cli
