#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include "claimworthy/corpus.hpp"

namespace claimworthy {

struct TemplateKind {
  enum class Tag { Long, Short, Custom };

  Tag tag = Tag::Short;
  std::string custom_name;  // set only when tag == Custom

  static TemplateKind long_form() { return {Tag::Long, {}}; }
  static TemplateKind short_form() { return {Tag::Short, {}}; }
  static TemplateKind custom(std::string name) {
    return {Tag::Custom, std::move(name)};
  }

  bool operator==(const TemplateKind&) const = default;
};

std::string to_string(const TemplateKind& kind);

struct PromptTemplate {
  TemplateKind kind;
  std::string text;
};

struct AssembledPrompt {
  std::string text;
  std::size_t demo_count = 0;
  std::size_t approx_tokens = 0;
};

// The two builtin task texts, byte-exact. Custom kinds throw.
PromptTemplate builtin_template(const TemplateKind& kind);

// Custom template from a plain-text file: the file body replaces only the
// task text (one trailing newline, if present, is stripped); assembly always
// follows the fixed grammar, so no {claim} placeholder exists.
PromptTemplate load_template_file(const std::filesystem::path& path,
                                  std::string name);

// Deterministic heuristic: ceil(code points / 4). Monotone in text length.
std::size_t estimate_tokens(std::string_view text);

// Rendered layout, byte-exact:
//   "Task: {template}\n"
//   per demo: "Text: {demo}\nAnswer: {Yes|No}\n\n"
//   "Text: {claim}\nAnswer:"
// The text ends at the answer slot; the test claim is always the final block.
AssembledPrompt assemble(const PromptTemplate& prompt_template,
                         const Claim& claim,
                         std::span<const LabeledExample> demos);

// Drops whole demonstrations from the end of the list until the assembled
// prompt fits the token budget. The template and test claim are never
// dropped; if they alone exceed the budget this throws.
AssembledPrompt truncate_to_budget(const PromptTemplate& prompt_template,
                                   const Claim& claim,
                                   std::span<const LabeledExample> demos,
                                   std::size_t budget);

}  // namespace claimworthy
