#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace claimworthy {

// Yes is the positive class everywhere (metrics, verbalizer, baselines).
enum class Label : std::uint8_t { Yes, No };

std::string_view to_string(Label label);

// Case-insensitive parse of "yes"/"no"; returns nullopt otherwise.
std::optional<Label> parse_label(std::string_view text);

struct Claim {
  std::string id;
  std::string text;
  std::optional<std::string> url;

  bool operator==(const Claim&) const = default;
};

struct LabeledExample {
  Claim claim;
  Label label = Label::No;

  bool operator==(const LabeledExample&) const = default;
};

// Lengths are measured in Unicode code points of the claim text; the average
// is rounded half-even to the nearest integer.
struct SplitStats {
  std::size_t n_samples = 0;
  std::size_t n_positive = 0;
  std::size_t n_negative = 0;
  std::size_t max_len = 0;
  std::size_t min_len = 0;
  std::size_t avg_len = 0;

  bool operator==(const SplitStats&) const = default;
};

enum class SplitFormat { Tsv };

// Number of UTF-8 code points in a byte string (continuation bytes skipped).
std::size_t codepoint_count(std::string_view text);

// Loads one dataset split. The file must be UTF-8 TSV with a header row
// containing at least `tweet_text` and `class_label`; `tweet_id` and
// `tweet_url` are captured when present. There is no quoting dialect: a row
// whose field count disagrees with the header is rejected.
std::vector<LabeledExample> load_split(const std::filesystem::path& path,
                                       SplitFormat format = SplitFormat::Tsv);

// Inverse of load_split for valid example lists (used by fixtures and the
// round-trip property test). Always writes all four columns.
void write_split(const std::filesystem::path& path,
                 std::span<const LabeledExample> examples);

SplitStats compute_stats(std::span<const LabeledExample> examples);

// Draws n distinct examples uniformly without replacement via a partial
// Fisher-Yates shuffle over indices, seeded as documented in rng.hpp. The
// same (train, n, seed) always yields the same list in the same order.
// `stratified` draws per-class quotas proportional to the training mix and
// then shuffles the combined list with the same engine; it defaults off.
std::vector<LabeledExample> sample_demonstrations(
    std::span<const LabeledExample> train, std::size_t n, std::uint32_t seed,
    bool stratified = false);

}  // namespace claimworthy
