#include "claimworthy/baselines.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "claimworthy/error.hpp"
#include "claimworthy/rng.hpp"

namespace claimworthy {

namespace {

constexpr int kNgramModelVersion = 1;

std::size_t label_index(Label label) { return label == Label::Yes ? 0 : 1; }

}  // namespace

MajorityModel majority_fit(std::span<const LabeledExample> train) {
  if (train.empty()) {
    throw Error(ErrorKind::InsufficientData,
                "majority baseline needs a non-empty training set");
  }
  std::size_t yes = 0;
  for (const LabeledExample& example : train) {
    if (example.label == Label::Yes) ++yes;
  }
  const std::size_t no = train.size() - yes;
  MajorityModel model;
  model.majority = yes > no ? Label::Yes : Label::No;  // tie -> No
  return model;
}

Label majority_predict(const MajorityModel& model, std::string_view text) {
  (void)text;
  return model.majority;
}

std::vector<Label> random_predict(std::uint32_t seed, std::size_t count) {
  rng::Engine engine = rng::make_engine(seed);
  std::vector<Label> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    out.push_back(rng::fair_bit(engine) ? Label::Yes : Label::No);
  }
  return out;
}

std::vector<std::string> extract_grams(std::string_view text,
                                       const NgramConfig& config) {
  std::vector<std::string> words;
  std::string current;
  for (unsigned char byte : text) {
    if (std::isalnum(byte) != 0) {
      current.push_back(static_cast<char>(std::tolower(byte)));
    } else if (!current.empty()) {
      words.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) words.push_back(std::move(current));

  std::vector<std::string> grams;
  for (int order = config.low; order <= config.high; ++order) {
    if (order <= 0) continue;
    const std::size_t n = static_cast<std::size_t>(order);
    if (words.size() < n) continue;
    for (std::size_t start = 0; start + n <= words.size(); ++start) {
      std::string gram = words[start];
      for (std::size_t k = 1; k < n; ++k) {
        gram.push_back(' ');
        gram.append(words[start + k]);
      }
      grams.push_back(std::move(gram));
    }
  }
  return grams;
}

NgramModel ngram_fit(std::span<const LabeledExample> train,
                     const NgramConfig& config) {
  bool saw[2] = {false, false};
  for (const LabeledExample& example : train) {
    saw[label_index(example.label)] = true;
  }
  if (!saw[0] || !saw[1]) {
    throw Error(ErrorKind::InsufficientData,
                "n-gram baseline needs both classes in the training set");
  }

  NgramModel model;
  model.config = config;

  std::size_t class_docs[2] = {0, 0};
  std::vector<std::size_t> counts[2];
  for (const LabeledExample& example : train) {
    const std::size_t cls = label_index(example.label);
    ++class_docs[cls];
    for (std::string& gram : extract_grams(example.claim.text, config)) {
      auto [it, inserted] =
          model.vocabulary.emplace(std::move(gram), model.vocabulary.size());
      if (inserted) {
        counts[0].push_back(0);
        counts[1].push_back(0);
      }
      ++counts[cls][it->second];
    }
  }

  const double vocab_size = static_cast<double>(model.vocabulary.size());
  for (std::size_t cls = 0; cls < 2; ++cls) {
    model.class_log_priors[cls] =
        std::log(static_cast<double>(class_docs[cls]) /
                 static_cast<double>(train.size()));
    double total = 0.0;
    for (std::size_t c : counts[cls]) total += static_cast<double>(c);
    const double denominator = total + config.alpha * vocab_size;
    model.gram_log_likelihoods[cls].resize(counts[cls].size());
    for (std::size_t g = 0; g < counts[cls].size(); ++g) {
      model.gram_log_likelihoods[cls][g] = std::log(
          (static_cast<double>(counts[cls][g]) + config.alpha) / denominator);
    }
  }
  return model;
}

Label ngram_predict(const NgramModel& model, std::string_view text) {
  double score_yes = model.class_log_priors[0];
  double score_no = model.class_log_priors[1];
  for (const std::string& gram : extract_grams(text, model.config)) {
    const auto it = model.vocabulary.find(gram);
    if (it == model.vocabulary.end()) continue;  // OOV grams are skipped
    score_yes += model.gram_log_likelihoods[0][it->second];
    score_no += model.gram_log_likelihoods[1][it->second];
  }
  return score_yes > score_no ? Label::Yes : Label::No;  // tie -> No
}

void save_ngram_model(const NgramModel& model,
                      const std::filesystem::path& path) {
  nlohmann::json doc;
  doc["version"] = kNgramModelVersion;
  doc["config"] = {{"low", model.config.low},
                   {"high", model.config.high},
                   {"alpha", model.config.alpha}};
  // Grams stored in index order so likelihood vectors line up positionally.
  std::vector<const std::string*> grams(model.vocabulary.size());
  for (const auto& [gram, index] : model.vocabulary) grams[index] = &gram;
  nlohmann::json vocab = nlohmann::json::array();
  for (const std::string* gram : grams) vocab.push_back(*gram);
  doc["vocabulary"] = std::move(vocab);
  doc["class_log_priors"] = {model.class_log_priors[0],
                             model.class_log_priors[1]};
  doc["gram_log_likelihoods"] = {model.gram_log_likelihoods[0],
                                 model.gram_log_likelihoods[1]};

  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error(ErrorKind::Config,
                "cannot write n-gram model to " + path.string());
  }
  out << doc.dump(2) << '\n';
}

NgramModel load_ngram_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::Config,
                "cannot open n-gram model: " + path.string());
  }
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Config,
                "malformed n-gram model " + path.string() + ": " + e.what());
  }
  if (doc.value("version", -1) != kNgramModelVersion) {
    throw Error(ErrorKind::Config,
                "unsupported n-gram model version in " + path.string());
  }
  NgramModel model;
  model.config.low = doc.at("config").at("low").get<int>();
  model.config.high = doc.at("config").at("high").get<int>();
  model.config.alpha = doc.at("config").at("alpha").get<double>();
  const auto& vocab = doc.at("vocabulary");
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    model.vocabulary.emplace(vocab[i].get<std::string>(), i);
  }
  for (std::size_t cls = 0; cls < 2; ++cls) {
    model.gram_log_likelihoods[cls] =
        doc.at("gram_log_likelihoods")[cls].get<std::vector<double>>();
    model.class_log_priors[cls] =
        doc.at("class_log_priors")[cls].get<double>();
    if (model.gram_log_likelihoods[cls].size() != model.vocabulary.size()) {
      throw Error(ErrorKind::Config,
                  "likelihood/vocabulary size mismatch in " + path.string());
    }
  }
  return model;
}

}  // namespace claimworthy
