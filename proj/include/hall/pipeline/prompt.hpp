#pragma once

#include <filesystem>
#include <mutex>
#include <string>
#include <string_view>

#include "hall/domain.hpp"

namespace hall {

/// Parses the template text format: preamble lines, a line containing only
/// "---", then blank-line separated "Q: ..." / "A: ..." blocks. Lines that
/// start with neither marker continue the previous field. Throws
/// TemplateError.
PromptTemplate parse_prompt_template(std::string_view text, int version = 1);

/// Preamble, each example as "Q: <question>\nA: <prophecy>\n" in template
/// order, then "Q: <visitor question>\nA:". The visitor question is passed
/// through sanitize_question and must stay within 1000 characters
/// (QuestionTooLong otherwise).
std::string assemble_prompt(const PromptTemplate& tmpl, const TranslatedQuestion& question);

/// A template file on disk. current() re-reads the file and bumps the
/// version whenever its content changes; if a later edit fails to parse the
/// last good template stays in effect.
class PromptTemplateFile {
 public:
  /// Throws TemplateError if the initial load fails.
  explicit PromptTemplateFile(std::filesystem::path path);

  PromptTemplate current();
  const std::filesystem::path& path() const noexcept { return path_; }

 private:
  std::filesystem::path path_;
  std::mutex mu_;
  std::string digest_;
  PromptTemplate cached_;
};

/// Template used when no file is configured.
PromptTemplate default_prompt_template();

}  // namespace hall
