#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <tuple>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "tutoreval/types.hpp"

namespace tutoreval {

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error(Errc::config, "SHA-256 digest failed");
  static const char* hex = "0123456789abcdef";
  std::string out(len * 2, '0');
  for (unsigned int i = 0; i < len; ++i) {
    out[2 * i] = hex[digest[i] >> 4];
    out[2 * i + 1] = hex[digest[i] & 0xf];
  }
  return out;
}

// Identity of one completion sample. sample_index keeps self-consistency
// samples at the same temperature from collapsing onto one cache slot.
struct CacheKey {
  std::string model_name;
  std::string prompt_digest;  // sha256 hex of the rendered prompt
  double temperature = 0.0;
  int sample_index = 0;

  static CacheKey for_prompt(std::string_view model_name, std::string_view prompt,
                             double temperature, int sample_index) {
    return CacheKey{std::string(model_name), sha256_hex(prompt), temperature, sample_index};
  }

  friend bool operator<(const CacheKey& a, const CacheKey& b) {
    return std::tie(a.model_name, a.prompt_digest, a.temperature, a.sample_index) <
           std::tie(b.model_name, b.prompt_digest, b.temperature, b.sample_index);
  }
  friend bool operator==(const CacheKey& a, const CacheKey& b) {
    return std::tie(a.model_name, a.prompt_digest, a.temperature, a.sample_index) ==
           std::tie(b.model_name, b.prompt_digest, b.temperature, b.sample_index);
  }
};

// Append-only response store: newline-delimited JSON on disk, full index in
// memory. Appends are whole-line writes under a writer lock; a torn final
// line from a killed process is skipped on the next load, and the first
// append afterwards starts on a fresh line so the tear cannot swallow it.
class ResponseCache {
 public:
  ResponseCache() = default;  // memory-only

  explicit ResponseCache(std::filesystem::path path) : path_(std::move(path)) {
    std::ifstream in(path_, std::ios::binary);
    if (!in) return;  // first run, file appears on first insert
    std::string line;
    while (std::getline(in, line)) {
      if (trim(line).empty()) continue;
      nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_discarded() || !j.contains("model") || !j.contains("prompt_digest") ||
          !j.contains("temperature") || !j.contains("sample_index") || !j.contains("response"))
        continue;
      CacheKey key{j["model"].get<std::string>(), j["prompt_digest"].get<std::string>(),
                   j["temperature"].get<double>(), j["sample_index"].get<int>()};
      index_[key] = j["response"].get<std::string>();
    }
    in.clear();
    in.seekg(0, std::ios::end);
    if (in.tellg() > 0) {
      in.seekg(-1, std::ios::end);
      char last = '\n';
      in.get(last);
      needs_newline_ = last != '\n';
    }
  }

  std::optional<std::string> lookup(const CacheKey& key) const {
    std::shared_lock lock(mu_);
    auto it = index_.find(key);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  void insert(const CacheKey& key, const std::string& response) {
    std::unique_lock lock(mu_);
    if (index_.emplace(key, response).second && !path_.empty()) {
      nlohmann::json j;
      j["model"] = key.model_name;
      j["prompt_digest"] = key.prompt_digest;
      j["temperature"] = key.temperature;
      j["sample_index"] = key.sample_index;
      j["response"] = response;
      j["timestamp"] = std::chrono::duration_cast<std::chrono::seconds>(
                           std::chrono::system_clock::now().time_since_epoch())
                           .count();
      std::ofstream out(path_, std::ios::binary | std::ios::app);
      if (!out) throw Error(Errc::config, "cannot append to cache file: " + path_.string());
      if (needs_newline_) {
        out << '\n';
        needs_newline_ = false;
      }
      out << j.dump() << '\n';
      out.flush();
    }
  }

  size_t size() const {
    std::shared_lock lock(mu_);
    return index_.size();
  }

 private:
  std::filesystem::path path_;
  mutable std::shared_mutex mu_;
  std::map<CacheKey, std::string> index_;
  bool needs_newline_ = false;  // file ends mid-line; guarded by mu_
};

}  // namespace tutoreval
