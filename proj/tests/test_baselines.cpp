#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "claimworthy/baselines.hpp"
#include "claimworthy/corpus.hpp"
#include "claimworthy/metrics.hpp"
#include "doctest.h"

using namespace claimworthy;

namespace {

const std::filesystem::path kDataDir = CLAIMWORTHY_TEST_DATA_DIR;

std::vector<LabeledExample> make_examples(
    std::initializer_list<std::pair<const char*, Label>> rows) {
  std::vector<LabeledExample> out;
  int id = 0;
  for (const auto& [text, label] : rows) {
    out.push_back({{std::to_string(++id), text, std::nullopt}, label});
  }
  return out;
}

}  // namespace

TEST_CASE("majority_fit picks the most frequent label, ties to No") {
  const auto yes_heavy = make_examples({{"a", Label::Yes},
                                        {"b", Label::Yes},
                                        {"c", Label::No}});
  CHECK(majority_fit(yes_heavy).majority == Label::Yes);

  const auto no_heavy = make_examples({{"a", Label::Yes},
                                       {"b", Label::No},
                                       {"c", Label::No}});
  CHECK(majority_fit(no_heavy).majority == Label::No);

  const auto tied = load_split(kDataDir / "mini" / "train.tsv");  // 15/15
  CHECK(majority_fit(tied).majority == Label::No);

  // Prediction ignores the text entirely.
  const MajorityModel model{Label::Yes};
  CHECK(majority_predict(model, "anything") == Label::Yes);
  CHECK(majority_predict(model, "") == Label::Yes);
}

TEST_CASE("majority baseline reproduces the 108/210 anchor") {
  // A no-majority model on a 108-positive / 210-negative gold split must
  // land exactly on accuracy 0.6604 with zero F1/recall/precision.
  std::vector<Label> gold;
  for (int i = 0; i < 108; ++i) gold.push_back(Label::Yes);
  for (int i = 0; i < 210; ++i) gold.push_back(Label::No);
  const std::vector<Label> pred(gold.size(), Label::No);
  const MetricsReport r = report(confusion(pred, gold));
  CHECK(render4(r.accuracy) == "0.6604");
  CHECK(render4(r.f1) == "0.0000");
  CHECK(render4(r.recall) == "0.0000");
  CHECK(render4(r.precision) == "0.0000");
}

TEST_CASE("random_predict stream is frozen") {
  const std::vector<Label> pred = random_predict(7, 5);
  CHECK(pred == std::vector<Label>{Label::No, Label::No, Label::Yes,
                                   Label::No, Label::No});
  CHECK(random_predict(7, 5) == pred);
  CHECK(random_predict(8, 5) != pred);
  CHECK(random_predict(7, 0).empty());
}

TEST_CASE("random_predict is balanced over many draws") {
  const std::vector<Label> pred = random_predict(123, 100000);
  std::size_t yes = 0;
  for (Label l : pred) yes += l == Label::Yes ? 1 : 0;
  const double rate = static_cast<double>(yes) / pred.size();
  CHECK(rate >= 0.495);
  CHECK(rate <= 0.505);
}

TEST_CASE("extract_grams lowercases, splits, and joins orders") {
  const NgramConfig config{1, 2, 1.0};
  const auto grams = extract_grams("The CDC reported 120,000!", config);
  const std::vector<std::string> expected{
      "the", "cdc", "reported", "120", "000",
      "the cdc", "cdc reported", "reported 120", "120 000"};
  CHECK(grams == expected);

  CHECK(extract_grams("", config).empty());
  CHECK(extract_grams("!!!", config).empty());
  CHECK(extract_grams("Word", config) == std::vector<std::string>{"word"});

  const NgramConfig unigrams{1, 1, 1.0};
  CHECK(extract_grams("a b", unigrams) ==
        std::vector<std::string>{"a", "b"});
}

TEST_CASE("naive Bayes separates a toy corpus and ties to No") {
  const auto train = make_examples({{"a b", Label::Yes}, {"c d", Label::No}});
  const NgramModel model = ngram_fit(train);

  CHECK(ngram_predict(model, "a") == Label::Yes);
  CHECK(ngram_predict(model, "b") == Label::Yes);
  CHECK(ngram_predict(model, "c") == Label::No);
  CHECK(ngram_predict(model, "d") == Label::No);

  // One gram from each class gives an exact score tie: break to No.
  CHECK(ngram_predict(model, "a c") == Label::No);

  // Fully out-of-vocabulary text falls back to the (equal) priors: No.
  CHECK(ngram_predict(model, "zzz qqq") == Label::No);

  // Balanced training set means equal class priors.
  CHECK(model.class_log_priors[0] == model.class_log_priors[1]);
}

TEST_CASE("naive Bayes priors reflect class imbalance") {
  const auto train = make_examples({{"x", Label::Yes},
                                    {"y", Label::Yes},
                                    {"z", Label::Yes},
                                    {"w", Label::No}});
  const NgramModel model = ngram_fit(train);
  // index 0 holds the positive class
  CHECK(model.class_log_priors[0] > model.class_log_priors[1]);
  CHECK(model.class_log_priors[0] ==
        doctest::Approx(std::log(0.75)).epsilon(1e-12));
  CHECK(model.class_log_priors[1] ==
        doctest::Approx(std::log(0.25)).epsilon(1e-12));
}

TEST_CASE("ngram baseline achieves F1 1.0 on a separable corpus") {
  // Marker word "zebra" decides the label; disjoint filler lexicons keep
  // the classes separable so the oracle must be perfect on held-out text.
  const auto train = make_examples({
      {"amber basil zebra cedar", Label::Yes},
      {"delta zebra ember", Label::Yes},
      {"zebra fjord grove", Label::Yes},
      {"amber basil cedar", Label::No},
      {"delta ember heath", Label::No},
      {"fjord grove ivory", Label::No},
  });
  const auto test = make_examples({
      {"cedar zebra heath", Label::Yes},
      {"ivory zebra amber", Label::Yes},
      {"basil delta grove", Label::No},
      {"heath ivory ember", Label::No},
  });
  const NgramModel model = ngram_fit(train);
  std::vector<Label> pred, gold;
  for (const auto& ex : test) {
    pred.push_back(ngram_predict(model, ex.claim.text));
    gold.push_back(ex.label);
  }
  const MetricsReport r = report(confusion(pred, gold));
  CHECK(r.f1 == 1.0);
  CHECK(r.accuracy == 1.0);
}

TEST_CASE("ngram model save and load round trips") {
  const auto train = load_split(kDataDir / "mini" / "train.tsv");
  const NgramModel model = ngram_fit(train);
  const auto path =
      std::filesystem::temp_directory_path() / "claimworthy_ngram.json";
  save_ngram_model(model, path);
  const NgramModel loaded = load_ngram_model(path);

  CHECK(loaded.config.low == model.config.low);
  CHECK(loaded.config.high == model.config.high);
  CHECK(loaded.config.alpha == model.config.alpha);
  CHECK(loaded.vocabulary == model.vocabulary);
  CHECK(loaded.class_log_priors[0] == model.class_log_priors[0]);
  CHECK(loaded.class_log_priors[1] == model.class_log_priors[1]);
  CHECK(loaded.gram_log_likelihoods[0] == model.gram_log_likelihoods[0]);
  CHECK(loaded.gram_log_likelihoods[1] == model.gram_log_likelihoods[1]);

  const auto test = load_split(kDataDir / "mini" / "test.tsv");
  for (const auto& ex : test) {
    CHECK(ngram_predict(loaded, ex.claim.text) ==
          ngram_predict(model, ex.claim.text));
  }
  std::filesystem::remove(path);

  CHECK_THROWS((void)load_ngram_model("/nonexistent/model.json"));
}
