#include <algorithm>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "claimworthy/corpus.hpp"
#include "claimworthy/error.hpp"
#include "doctest.h"

using namespace claimworthy;

namespace {

const std::filesystem::path kDataDir = CLAIMWORTHY_TEST_DATA_DIR;

std::filesystem::path temp_file(const std::string& name) {
  return std::filesystem::temp_directory_path() / name;
}

void write_text(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << body;
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an Error");
  return ErrorKind::Internal;
}

}  // namespace

TEST_CASE("label round trip and parsing") {
  CHECK(to_string(Label::Yes) == "Yes");
  CHECK(to_string(Label::No) == "No");
  CHECK(parse_label("Yes") == Label::Yes);
  CHECK(parse_label("yes") == Label::Yes);
  CHECK(parse_label("YES") == Label::Yes);
  CHECK(parse_label("nO") == Label::No);
  CHECK_FALSE(parse_label("Y").has_value());
  CHECK_FALSE(parse_label("maybe").has_value());
  CHECK_FALSE(parse_label("").has_value());
  CHECK_FALSE(parse_label(" yes").has_value());
}

TEST_CASE("codepoint_count skips UTF-8 continuation bytes") {
  CHECK(codepoint_count("") == 0);
  CHECK(codepoint_count("abc") == 3);
  CHECK(codepoint_count("Caf\xc3\xa9") == 4);           // Café
  CHECK(codepoint_count("\xf0\x9f\x8c\x85") == 1);      // one emoji, 4 bytes
  CHECK(codepoint_count("a\xf0\x9f\x8c\x85z") == 3);
}

TEST_CASE("load_split reads the mini training fixture") {
  const auto train = load_split(kDataDir / "mini" / "train.tsv");
  REQUIRE(train.size() == 30);
  CHECK(train.front().claim.id == "1001");
  CHECK(train.back().claim.id == "1030");

  std::size_t positives = 0;
  for (const auto& ex : train) positives += ex.label == Label::Yes ? 1 : 0;
  CHECK(positives == 15);

  // Odd ids carry Yes in the fixture.
  CHECK(train[0].label == Label::Yes);
  CHECK(train[1].label == Label::No);
}

TEST_CASE("empty url column becomes nullopt") {
  const auto train = load_split(kDataDir / "mini" / "train.tsv");
  const auto find = [&](const std::string& id) {
    return std::find_if(train.begin(), train.end(), [&](const auto& ex) {
      return ex.claim.id == id;
    });
  };
  auto no_url = find("1004");
  REQUIRE(no_url != train.end());
  CHECK_FALSE(no_url->claim.url.has_value());

  auto with_url = find("1001");
  REQUIRE(with_url != train.end());
  REQUIRE(with_url->claim.url.has_value());
  CHECK(with_url->claim.url->starts_with("http"));
}

TEST_CASE("write_split then load_split round trips") {
  std::vector<LabeledExample> examples{
      {{"1", "plain ascii", std::string("https://x/1")}, Label::Yes},
      {{"2", "tail emoji \xf0\x9f\x8c\x85", std::nullopt}, Label::No},
      {{"3", "Caf\xc3\xa9 claims 42%", std::string("https://x/3")},
       Label::Yes},
  };
  const auto path = temp_file("claimworthy_roundtrip.tsv");
  write_split(path, examples);
  const auto loaded = load_split(path);
  CHECK(loaded == examples);
  std::filesystem::remove(path);
}

TEST_CASE("load_split failure modes carry the dataset error kind") {
  CHECK(kind_of([] { (void)load_split("/nonexistent/claims.tsv"); }) ==
        ErrorKind::Dataset);

  const auto bad_header = temp_file("claimworthy_bad_header.tsv");
  write_text(bad_header, "id\turl\tbody\tlabel\n1\tu\tt\tYes\n");
  CHECK(kind_of([&] { (void)load_split(bad_header); }) == ErrorKind::Dataset);

  const auto bad_cols = temp_file("claimworthy_bad_cols.tsv");
  write_text(bad_cols,
             "tweet_id\ttweet_url\ttweet_text\tclass_label\n"
             "1\thttps://x\tonly three fields\n");
  CHECK(kind_of([&] { (void)load_split(bad_cols); }) == ErrorKind::Dataset);

  const auto bad_label = temp_file("claimworthy_bad_label.tsv");
  write_text(bad_label,
             "tweet_id\ttweet_url\ttweet_text\tclass_label\n"
             "1\thttps://x\ttext\tMaybe\n");
  CHECK(kind_of([&] { (void)load_split(bad_label); }) == ErrorKind::Dataset);

  for (const auto& p : {bad_header, bad_cols, bad_label}) {
    std::filesystem::remove(p);
  }
}

TEST_CASE("compute_stats counts, extremes, and half-even average") {
  std::vector<LabeledExample> examples{
      {{"1", "ab", std::nullopt}, Label::Yes},        // len 2
      {{"2", "abc", std::nullopt}, Label::No},        // len 3
  };
  SplitStats stats = compute_stats(examples);
  CHECK(stats.n_samples == 2);
  CHECK(stats.n_positive == 1);
  CHECK(stats.n_negative == 1);
  CHECK(stats.max_len == 3);
  CHECK(stats.min_len == 2);
  CHECK(stats.avg_len == 2);  // 2.5 rounds half-even to 2

  examples[0].claim.text = "abcd";  // lengths 4 and 3, mean 3.5
  stats = compute_stats(examples);
  CHECK(stats.avg_len == 4);  // 3.5 rounds half-even to 4

  CHECK(compute_stats({}) == SplitStats{});
}

TEST_CASE("compute_stats measures code points, not bytes") {
  std::vector<LabeledExample> examples{
      {{"1", "\xf0\x9f\x8c\x85", std::nullopt}, Label::No},  // 4 bytes, 1 cp
  };
  const SplitStats stats = compute_stats(examples);
  CHECK(stats.max_len == 1);
  CHECK(stats.min_len == 1);
  CHECK(stats.avg_len == 1);
}

TEST_CASE("stats on the mini fixtures are internally consistent") {
  for (const char* split : {"train.tsv", "dev.tsv", "test.tsv"}) {
    const auto examples = load_split(kDataDir / "mini" / split);
    const SplitStats stats = compute_stats(examples);
    CHECK(stats.n_samples == examples.size());
    CHECK(stats.n_positive + stats.n_negative == stats.n_samples);
    CHECK(stats.min_len <= stats.avg_len);
    CHECK(stats.avg_len <= stats.max_len);
  }
}

TEST_CASE("sample_demonstrations is frozen for a pinned seed") {
  std::vector<LabeledExample> train;
  for (int i = 0; i < 10; ++i) {
    train.push_back({{std::to_string(i), "text " + std::to_string(i),
                      std::nullopt},
                     i % 2 == 0 ? Label::Yes : Label::No});
  }
  const auto demos = sample_demonstrations(train, 3, 42);
  REQUIRE(demos.size() == 3);
  CHECK(demos[0].claim.id == "2");
  CHECK(demos[1].claim.id == "6");
  CHECK(demos[2].claim.id == "1");

  // Same seed, same draw; different seed, different draw order.
  CHECK(sample_demonstrations(train, 3, 42) == demos);
  bool any_diff = false;
  for (std::uint32_t seed = 0; seed < 5 && !any_diff; ++seed) {
    any_diff = sample_demonstrations(train, 3, seed) != demos;
  }
  CHECK(any_diff);
}

TEST_CASE("sample_demonstrations draws distinct examples") {
  const auto train = load_split(kDataDir / "mini" / "train.tsv");
  for (std::uint32_t seed : {1u, 2u, 3u}) {
    const auto demos = sample_demonstrations(train, 10, seed);
    std::set<std::string> ids;
    for (const auto& d : demos) ids.insert(d.claim.id);
    CHECK(ids.size() == demos.size());
  }
  CHECK(sample_demonstrations(train, 0, 1).empty());
  CHECK(sample_demonstrations(train, train.size(), 1).size() == train.size());
}

TEST_CASE("sample_demonstrations refuses oversized requests") {
  const auto train = load_split(kDataDir / "mini" / "dev.tsv");
  CHECK(kind_of([&] {
          (void)sample_demonstrations(train, train.size() + 1, 1);
        }) == ErrorKind::InsufficientData);
}

TEST_CASE("stratified sampling keeps class proportions") {
  const auto train = load_split(kDataDir / "mini" / "train.tsv");  // 15/15
  for (std::uint32_t seed : {1u, 9u, 42u}) {
    const auto demos = sample_demonstrations(train, 4, seed, true);
    REQUIRE(demos.size() == 4);
    std::size_t yes = 0;
    for (const auto& d : demos) yes += d.label == Label::Yes ? 1 : 0;
    CHECK(yes == 2);
  }
}
