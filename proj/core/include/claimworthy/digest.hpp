#pragma once

#include <string>
#include <string_view>

namespace claimworthy {

// Lowercase hex SHA-256. This is the pinned digest algorithm for prompt
// digests, cache keys, and golden-file checks; any conforming SHA-256
// implementation reproduces the same values.
std::string sha256_hex(std::string_view data);

// Digest of an assembled prompt's text.
std::string prompt_digest(std::string_view prompt_text);

// Shortest round-trip decimal rendering of a double ("0", "0.5", "1e-05").
// Used wherever a floating-point value participates in a digest.
std::string canonical_double(double value);

// Cache key for a generation request. Canonical serialization, pinned:
//   sha256_hex(model \x1f canonical_double(temperature) \x1f prompt_text)
std::string cache_key(std::string_view model, double temperature,
                      std::string_view prompt_text);

}  // namespace claimworthy
