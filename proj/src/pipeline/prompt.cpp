#include "hall/pipeline/prompt.hpp"

#include <fstream>
#include <sstream>
#include <vector>

#include "hall/digest.hpp"
#include "hall/errors.hpp"

namespace hall {

namespace {

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string line(text.substr(start, end - start));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(std::move(line));
    if (end == text.size()) break;
    start = end + 1;
  }
  return lines;
}

bool is_blank(std::string_view s) { return s.find_first_not_of(" \t") == std::string_view::npos; }

std::string after_marker(std::string_view line) {
  std::string_view rest = line.substr(2);
  if (!rest.empty() && rest.front() == ' ') rest.remove_prefix(1);
  return std::string(rest);
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::TemplateError, "cannot read template " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

PromptTemplate parse_prompt_template(std::string_view text, int version) {
  auto lines = split_lines(text);
  std::size_t delim = 0;
  while (delim < lines.size() && lines[delim] != "---") ++delim;
  if (delim == lines.size()) {
    throw Error(ErrorCode::TemplateError, "template has no '---' delimiter line");
  }

  PromptTemplate tmpl;
  tmpl.version = version;
  std::size_t end = delim;
  while (end > 0 && is_blank(lines[end - 1])) --end;
  for (std::size_t i = 0; i < end; ++i) {
    if (i) tmpl.preamble += '\n';
    tmpl.preamble += lines[i];
  }

  enum class Field { None, Question, Answer } field = Field::None;
  std::optional<FewShotExample> pending;
  auto flush = [&](std::size_t line_no) {
    if (!pending) return;
    if (field != Field::Answer) {
      throw Error(ErrorCode::TemplateError, "question without answer",
                  {{"line", line_no + 1}});
    }
    tmpl.few_shot.push_back(std::move(*pending));
    pending.reset();
    field = Field::None;
  };

  for (std::size_t i = delim + 1; i < lines.size(); ++i) {
    const std::string& line = lines[i];
    if (line.starts_with("Q:")) {
      flush(i);
      pending = FewShotExample{after_marker(line), {}};
      field = Field::Question;
    } else if (line.starts_with("A:")) {
      if (!pending || field != Field::Question) {
        throw Error(ErrorCode::TemplateError, "answer without question", {{"line", i + 1}});
      }
      pending->prophecy = after_marker(line);
      field = Field::Answer;
    } else if (is_blank(line)) {
      flush(i);
    } else if (field == Field::Question) {
      pending->question += "\n" + line;
    } else if (field == Field::Answer) {
      pending->prophecy += "\n" + line;
    } else {
      throw Error(ErrorCode::TemplateError, "text outside a Q:/A: block", {{"line", i + 1}});
    }
  }
  flush(lines.size());
  return tmpl;
}

std::string assemble_prompt(const PromptTemplate& tmpl, const TranslatedQuestion& question) {
  std::string visitor = sanitize_question(question.english_text);
  const std::size_t chars = utf8_length(visitor);
  if (chars > kMaxQuestionChars) {
    throw Error(ErrorCode::QuestionTooLong, "question exceeds 1000 characters",
                {{"length", chars}});
  }
  std::string out = tmpl.preamble;
  out += '\n';
  for (const auto& ex : tmpl.few_shot) {
    out += "Q: " + ex.question + "\nA: " + ex.prophecy + "\n";
  }
  out += "Q: " + visitor + "\nA:";
  return out;
}

PromptTemplateFile::PromptTemplateFile(std::filesystem::path path) : path_(std::move(path)) {
  std::string text = read_file(path_);
  cached_ = parse_prompt_template(text, 1);
  digest_ = sha256_hex(text);
}

PromptTemplate PromptTemplateFile::current() {
  std::lock_guard lock(mu_);
  try {
    std::string text = read_file(path_);
    std::string digest = sha256_hex(text);
    if (digest != digest_) {
      PromptTemplate next = parse_prompt_template(text, cached_.version + 1);
      cached_ = std::move(next);
      digest_ = std::move(digest);
    }
  } catch (const Error&) {
    // keep serving the last good template
  }
  return cached_;
}

PromptTemplate default_prompt_template() {
  PromptTemplate t;
  t.version = 1;
  t.preamble =
      "You are the Medium of an AI deity in a cosmic temple. Answer each visitor's question "
      "with a short, dreamlike prophecy of two to four sentences, rich in visual imagery "
      "suitable for a text-to-video model.";
  t.few_shot = {
      {"Will I be rich?",
       "Gold rivers fork beneath a violet moon; follow the narrower one. Your wealth arrives "
       "as light, not coin."},
      {"Will I find love?",
       "Two lanterns drift across a silent sea and learn each other's flame. Wait for the "
       "tide that sings your name."},
  };
  return t;
}

}  // namespace hall
