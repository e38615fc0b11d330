#include "claimworthy/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cfenv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>

#include "claimworthy/error.hpp"
#include "claimworthy/rng.hpp"

namespace claimworthy {

namespace {

std::string ascii_lower(std::string_view text) {
  std::string out(text);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) {
    return static_cast<char>(std::tolower(c));
  });
  return out;
}

bool is_blank(std::string_view text) {
  return std::all_of(text.begin(), text.end(), [](unsigned char c) {
    return std::isspace(c) != 0;
  });
}

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
  return fields;
}

[[noreturn]] void dataset_error(const std::string& message) {
  throw Error(ErrorKind::Dataset, message);
}

}  // namespace

std::string_view to_string(Label label) {
  return label == Label::Yes ? "Yes" : "No";
}

std::optional<Label> parse_label(std::string_view text) {
  const std::string lowered = ascii_lower(text);
  if (lowered == "yes") return Label::Yes;
  if (lowered == "no") return Label::No;
  return std::nullopt;
}

std::size_t codepoint_count(std::string_view text) {
  std::size_t count = 0;
  for (unsigned char byte : text) {
    if ((byte & 0xC0) != 0x80) ++count;
  }
  return count;
}

std::vector<LabeledExample> load_split(const std::filesystem::path& path,
                                       SplitFormat format) {
  (void)format;  // only TSV exists
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    dataset_error("cannot open dataset file: " + path.string());
  }
  std::string content((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
  if (content.empty()) {
    dataset_error("empty split: " + path.string() + " has no content");
  }

  std::vector<std::string_view> lines;
  {
    std::string_view rest = content;
    while (!rest.empty()) {
      const std::size_t nl = rest.find('\n');
      std::string_view line =
          nl == std::string_view::npos ? rest : rest.substr(0, nl);
      if (line.ends_with('\r')) line.remove_suffix(1);
      lines.push_back(line);
      if (nl == std::string_view::npos) break;
      rest = rest.substr(nl + 1);
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
  }
  if (lines.empty()) {
    dataset_error("empty split: " + path.string() + " has no content");
  }

  const std::vector<std::string_view> header = split_tabs(lines.front());
  std::unordered_map<std::string, std::size_t> columns;
  for (std::size_t i = 0; i < header.size(); ++i) {
    columns.emplace(ascii_lower(header[i]), i);
  }
  for (const char* required : {"tweet_text", "class_label"}) {
    if (!columns.contains(required)) {
      dataset_error(std::string("missing required column `") + required +
                    "` in " + path.string());
    }
  }
  const std::size_t text_col = columns.at("tweet_text");
  const std::size_t label_col = columns.at("class_label");
  const auto id_it = columns.find("tweet_id");
  const auto url_it = columns.find("tweet_url");

  std::vector<LabeledExample> examples;
  examples.reserve(lines.size() - 1);
  for (std::size_t row = 1; row < lines.size(); ++row) {
    const std::size_t line_no = row + 1;  // 1-based, header is line 1
    if (lines[row].empty()) continue;
    const std::vector<std::string_view> fields = split_tabs(lines[row]);
    if (fields.size() != header.size()) {
      std::ostringstream msg;
      msg << "line " << line_no << ": expected " << header.size()
          << " tab-separated fields, got " << fields.size()
          << " (embedded tabs are not supported)";
      dataset_error(msg.str());
    }
    const std::optional<Label> label = parse_label(fields[label_col]);
    if (!label) {
      std::ostringstream msg;
      msg << "line " << line_no << ": unparseable label \""
          << fields[label_col] << "\" (expected Yes/No)";
      dataset_error(msg.str());
    }
    if (is_blank(fields[text_col])) {
      std::ostringstream msg;
      msg << "line " << line_no << ": empty tweet_text";
      dataset_error(msg.str());
    }
    LabeledExample example;
    example.claim.text = std::string(fields[text_col]);
    if (id_it != columns.end()) {
      example.claim.id = std::string(fields[id_it->second]);
    }
    if (url_it != columns.end() && !fields[url_it->second].empty()) {
      example.claim.url = std::string(fields[url_it->second]);
    }
    example.label = *label;
    examples.push_back(std::move(example));
  }
  if (examples.empty()) {
    dataset_error("empty split: " + path.string() + " has a header but no rows");
  }
  return examples;
}

void write_split(const std::filesystem::path& path,
                 std::span<const LabeledExample> examples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    dataset_error("cannot open for writing: " + path.string());
  }
  out << "tweet_id\ttweet_url\ttweet_text\tclass_label\n";
  for (const LabeledExample& example : examples) {
    if (example.claim.text.find('\t') != std::string::npos ||
        example.claim.text.find('\n') != std::string::npos) {
      dataset_error("claim text contains tab or newline; not representable");
    }
    out << example.claim.id << '\t' << example.claim.url.value_or("") << '\t'
        << example.claim.text << '\t' << to_string(example.label) << '\n';
  }
}

SplitStats compute_stats(std::span<const LabeledExample> examples) {
  SplitStats stats;
  if (examples.empty()) return stats;
  stats.n_samples = examples.size();
  stats.min_len = std::numeric_limits<std::size_t>::max();
  double length_sum = 0.0;
  for (const LabeledExample& example : examples) {
    if (example.label == Label::Yes) {
      ++stats.n_positive;
    } else {
      ++stats.n_negative;
    }
    const std::size_t len = codepoint_count(example.claim.text);
    stats.max_len = std::max(stats.max_len, len);
    stats.min_len = std::min(stats.min_len, len);
    length_sum += static_cast<double>(len);
  }
  // nearbyint under the default FP environment rounds half to even.
  const double mean = length_sum / static_cast<double>(stats.n_samples);
  stats.avg_len = static_cast<std::size_t>(std::nearbyint(mean));
  return stats;
}

namespace {

std::vector<std::size_t> draw_indices(std::size_t population, std::size_t n,
                                      rng::Engine& engine) {
  std::vector<std::size_t> indices(population);
  for (std::size_t i = 0; i < population; ++i) indices[i] = i;
  // Partial Fisher-Yates: after i steps the first i slots hold the sample.
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j =
        i + rng::bounded(engine, static_cast<std::uint32_t>(population - i));
    std::swap(indices[i], indices[j]);
  }
  indices.resize(n);
  return indices;
}

}  // namespace

std::vector<LabeledExample> sample_demonstrations(
    std::span<const LabeledExample> train, std::size_t n, std::uint32_t seed,
    bool stratified) {
  if (n > train.size()) {
    std::ostringstream msg;
    msg << "cannot sample " << n << " demonstrations from a training set of "
        << train.size();
    throw Error(ErrorKind::InsufficientData, msg.str());
  }
  rng::Engine engine = rng::make_engine(seed);
  std::vector<LabeledExample> out;
  out.reserve(n);
  if (!stratified) {
    for (std::size_t index : draw_indices(train.size(), n, engine)) {
      out.push_back(train[index]);
    }
    return out;
  }

  std::vector<std::size_t> yes_indices;
  std::vector<std::size_t> no_indices;
  for (std::size_t i = 0; i < train.size(); ++i) {
    (train[i].label == Label::Yes ? yes_indices : no_indices).push_back(i);
  }
  // Proportional quota for the positive class, rounded to nearest.
  std::size_t n_yes = train.empty()
                          ? 0
                          : (n * yes_indices.size() + train.size() / 2) /
                                train.size();
  n_yes = std::min(n_yes, yes_indices.size());
  std::size_t n_no = n - n_yes;
  if (n_no > no_indices.size()) {
    n_yes += n_no - no_indices.size();
    n_no = no_indices.size();
  }
  for (std::size_t pos : draw_indices(yes_indices.size(), n_yes, engine)) {
    out.push_back(train[yes_indices[pos]]);
  }
  for (std::size_t pos : draw_indices(no_indices.size(), n_no, engine)) {
    out.push_back(train[no_indices[pos]]);
  }
  rng::shuffle(out, engine);
  return out;
}

}  // namespace claimworthy
