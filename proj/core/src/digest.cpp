#include "claimworthy/digest.hpp"

#include <openssl/sha.h>

#include <array>
#include <charconv>
#include <cstdint>

namespace claimworthy {

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, SHA256_DIGEST_LENGTH> raw{};
  SHA256(reinterpret_cast<const unsigned char*>(data.data()), data.size(),
         raw.data());
  static const char* kHex = "0123456789abcdef";
  std::string out;
  out.reserve(raw.size() * 2);
  for (unsigned char byte : raw) {
    out.push_back(kHex[byte >> 4]);
    out.push_back(kHex[byte & 0x0f]);
  }
  return out;
}

std::string prompt_digest(std::string_view prompt_text) {
  return sha256_hex(prompt_text);
}

std::string canonical_double(double value) {
  std::array<char, 64> buffer{};
  auto [end, ec] =
      std::to_chars(buffer.data(), buffer.data() + buffer.size(), value);
  return std::string(buffer.data(), end);
}

std::string cache_key(std::string_view model, double temperature,
                      std::string_view prompt_text) {
  std::string material;
  material.reserve(model.size() + prompt_text.size() + 24);
  material.append(model);
  material.push_back('\x1f');
  material.append(canonical_double(temperature));
  material.push_back('\x1f');
  material.append(prompt_text);
  return sha256_hex(material);
}

}  // namespace claimworthy
