#include "claimworthy/prompt.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "claimworthy/error.hpp"

namespace claimworthy {

namespace {

// Task texts as published, including the missing space before the closing
// constraint sentence of the long form. Do not edit: the test suite pins
// SHA-256 digests of both strings.
constexpr std::string_view kLongTemplate =
    "The aim of this task is to determine whether a claim in a tweet and/or "
    "transcriptions is worth fact-checking. Typical approaches to make that "
    "decision require to either resort to the judgments of professional "
    "fact-checkers or to human annotators to answer several auxiliary "
    "questions such as \"does it contain a verifiable factual claim?\", and "
    "\"is it harmful?\", before deciding on the final check-worthiness "
    "label.You just need to answer \"Yes\" or \"No\".";

constexpr std::string_view kShortTemplate =
    "Is the claim in this tweet worth conducting factual verification? You "
    "just need to answer \"Yes\" or \"No\".";

bool is_blank(std::string_view text) {
  for (unsigned char c : text) {
    if (std::isspace(c) == 0) return false;
  }
  return true;
}

}  // namespace

std::string to_string(const TemplateKind& kind) {
  switch (kind.tag) {
    case TemplateKind::Tag::Long: return "Long";
    case TemplateKind::Tag::Short: return "Short";
    case TemplateKind::Tag::Custom: return kind.custom_name;
  }
  return "?";
}

PromptTemplate builtin_template(const TemplateKind& kind) {
  switch (kind.tag) {
    case TemplateKind::Tag::Long:
      return {kind, std::string(kLongTemplate)};
    case TemplateKind::Tag::Short:
      return {kind, std::string(kShortTemplate)};
    case TemplateKind::Tag::Custom:
      throw Error(ErrorKind::NotBuiltin,
                  "no builtin template named \"" + kind.custom_name + "\"");
  }
  throw Error(ErrorKind::Internal, "unreachable template kind");
}

PromptTemplate load_template_file(const std::filesystem::path& path,
                                  std::string name) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorKind::Config,
                "cannot open template file: " + path.string());
  }
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  if (text.ends_with('\n')) text.pop_back();
  if (text.ends_with('\r')) text.pop_back();
  if (is_blank(text)) {
    throw Error(ErrorKind::Config,
                "template file is empty: " + path.string());
  }
  return {TemplateKind::custom(std::move(name)), std::move(text)};
}

std::size_t estimate_tokens(std::string_view text) {
  const std::size_t chars = codepoint_count(text);
  return (chars + 3) / 4;
}

AssembledPrompt assemble(const PromptTemplate& prompt_template,
                         const Claim& claim,
                         std::span<const LabeledExample> demos) {
  if (is_blank(claim.text)) {
    throw Error(ErrorKind::Validation, "claim text is empty");
  }
  std::string text;
  text.reserve(prompt_template.text.size() + claim.text.size() +
               demos.size() * 48 + 32);
  text.append("Task: ");
  text.append(prompt_template.text);
  text.push_back('\n');
  for (const LabeledExample& demo : demos) {
    text.append("Text: ");
    text.append(demo.claim.text);
    text.append("\nAnswer: ");
    text.append(to_string(demo.label));
    text.append("\n\n");
  }
  text.append("Text: ");
  text.append(claim.text);
  text.append("\nAnswer:");

  AssembledPrompt prompt;
  prompt.demo_count = demos.size();
  prompt.approx_tokens = estimate_tokens(text);
  prompt.text = std::move(text);
  return prompt;
}

AssembledPrompt truncate_to_budget(const PromptTemplate& prompt_template,
                                   const Claim& claim,
                                   std::span<const LabeledExample> demos,
                                   std::size_t budget) {
  std::size_t keep = demos.size();
  while (true) {
    AssembledPrompt prompt =
        assemble(prompt_template, claim, demos.subspan(0, keep));
    if (prompt.approx_tokens <= budget) return prompt;
    if (keep == 0) {
      std::ostringstream msg;
      msg << "token budget " << budget << " is below the template+claim size "
          << prompt.approx_tokens;
      throw Error(ErrorKind::Budget, msg.str());
    }
    --keep;
  }
}

}  // namespace claimworthy
