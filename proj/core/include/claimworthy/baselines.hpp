#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "claimworthy/corpus.hpp"

namespace claimworthy {

// ----- Majority (dummy) -----

struct MajorityModel {
  Label majority = Label::No;
};

// Stores the most frequent training label; ties break to No.
MajorityModel majority_fit(std::span<const LabeledExample> train);

Label majority_predict(const MajorityModel& model, std::string_view text);

// ----- Random -----

// Each element is Yes with probability exactly 1/2 under the pinned PRNG
// (one fair bit per element); deterministic given the seed.
std::vector<Label> random_predict(std::uint32_t seed, std::size_t count);

// ----- N-grams + multinomial naive Bayes -----

struct NgramConfig {
  int low = 1;   // smallest word-gram order
  int high = 2;  // largest word-gram order
  double alpha = 1.0;  // Laplace smoothing
};

struct NgramModel {
  NgramConfig config;
  std::unordered_map<std::string, std::size_t> vocabulary;  // gram -> index
  double class_log_priors[2] = {0.0, 0.0};                  // [Yes, No]
  std::vector<double> gram_log_likelihoods[2];              // [Yes, No]
};

// Lowercases, splits on non-alphanumeric runs (ASCII), and emits word
// n-grams for every order in [low, high], joined with a single space.
std::vector<std::string> extract_grams(std::string_view text,
                                       const NgramConfig& config);

NgramModel ngram_fit(std::span<const LabeledExample> train,
                     const NgramConfig& config = {});

// argmax class posterior over gram occurrences; out-of-vocabulary grams are
// skipped; ties break to No.
Label ngram_predict(const NgramModel& model, std::string_view text);

// Versioned JSON container (vocabulary, priors, likelihoods, config).
void save_ngram_model(const NgramModel& model,
                      const std::filesystem::path& path);
NgramModel load_ngram_model(const std::filesystem::path& path);

}  // namespace claimworthy
