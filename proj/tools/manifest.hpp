#pragma once

#include <json.hpp>

#include <filesystem>
#include <map>
#include <string>

namespace idtrack::cli {

inline constexpr const char* kToolVersion = "0.1.0";

/// Lowercase hex SHA-256 of a file's bytes.
[[nodiscard]] std::string sha256_file(const std::filesystem::path& path);

/// Run record written next to every command's outputs.
class RunManifest {
 public:
  explicit RunManifest(std::string command);

  void flag(const std::string& name, nlohmann::json value) { doc_["flags"][name] = std::move(value); }
  void seed(std::uint64_t seed) { doc_["seed"] = seed; }
  void config(nlohmann::json cfg) { doc_["config"] = std::move(cfg); }
  void input(const std::filesystem::path& path);
  void output(const std::filesystem::path& path);
  void timings(const std::map<std::string, double>& seconds);
  void extra(const std::string& key, nlohmann::json value) { doc_[key] = std::move(value); }

  void write(const std::filesystem::path& path) const;

 private:
  nlohmann::json doc_;
};

}  // namespace idtrack::cli
