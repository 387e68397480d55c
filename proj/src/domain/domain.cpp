#include "hall/domain.hpp"

#include <cctype>
#include <cmath>

#include "hall/errors.hpp"

namespace hall {

namespace {

template <typename T>
T field(const json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::ParseError, std::string("bad or missing field '") + key + "'",
                {{"field", key}, {"detail", e.what()}});
  }
}

void require_object(const json& j, const char* what) {
  if (!j.is_object()) {
    throw Error(ErrorCode::ParseError, std::string(what) + " must be a JSON object");
  }
}

bool is_alpha(char c) { return std::isalpha(static_cast<unsigned char>(c)) != 0; }
bool is_alnum(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

}  // namespace

std::size_t utf8_length(std::string_view s) noexcept {
  std::size_t n = 0;
  for (unsigned char c : s) {
    if ((c & 0xc0) != 0x80) ++n;
  }
  return n;
}

std::string sanitize_question(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  bool in_newline_run = false;
  for (char ch : text) {
    auto c = static_cast<unsigned char>(ch);
    if (c == '\n' || c == '\r') {
      if (!in_newline_run) out.push_back(' ');
      in_newline_run = true;
      continue;
    }
    in_newline_run = false;
    if (c < 0x20 || c == 0x7f) continue;
    out.push_back(ch);
  }
  return out;
}

bool is_language_tag(std::string_view tag) noexcept {
  if (tag.empty() || tag.size() > 35) return false;
  std::size_t start = 0;
  bool primary = true;
  while (start <= tag.size()) {
    std::size_t end = tag.find('-', start);
    if (end == std::string_view::npos) end = tag.size();
    std::string_view sub = tag.substr(start, end - start);
    if (sub.empty() || sub.size() > 8) return false;
    for (char c : sub) {
      if (primary ? !is_alpha(c) : !is_alnum(c)) return false;
    }
    if (primary && (sub.size() < 2 || sub.size() > 3)) return false;
    primary = false;
    start = end + 1;
  }
  return true;
}

bool is_english_tag(std::string_view tag) noexcept {
  if (tag.size() < 2) return false;
  if (std::tolower(static_cast<unsigned char>(tag[0])) != 'e' ||
      std::tolower(static_cast<unsigned char>(tag[1])) != 'n') {
    return false;
  }
  return tag.size() == 2 || tag[2] == '-';
}

TranslatedQuestion TranslatedQuestion::make(std::string source_lang, std::string source_text,
                                            std::string english_text) {
  if (!is_language_tag(source_lang)) {
    throw Error(ErrorCode::InvalidArgument, "source_lang is not a language tag",
                {{"source_lang", source_lang}});
  }
  TranslatedQuestion q;
  q.source_lang = std::move(source_lang);
  q.source_text = sanitize_question(source_text);
  q.english_text = is_english_tag(q.source_lang) ? q.source_text : sanitize_question(english_text);
  if (q.english_text.find_first_not_of(' ') == std::string::npos) {
    throw Error(ErrorCode::EmptyQuestion, "question text is empty");
  }
  const std::size_t chars = utf8_length(q.english_text);
  if (chars > kMaxQuestionChars) {
    throw Error(ErrorCode::QuestionTooLong, "question exceeds 1000 characters",
                {{"length", chars}});
  }
  return q;
}

void ProphecyText::validate() const {
  if (text.empty()) throw Error(ErrorCode::EmptyProphecy, "prophecy text is empty");
  const std::size_t chars = utf8_length(text);
  if (chars > kMaxProphecyChars) {
    throw Error(ErrorCode::ProphecyTooLong, "prophecy exceeds 2000 characters",
                {{"length", chars}});
  }
}

int VideoJob::frame_count() const noexcept {
  return static_cast<int>(std::llround(target_duration_s * fps));
}

void VideoJob::validate() const {
  if (!(target_duration_s > 0.0) || !std::isfinite(target_duration_s)) {
    throw Error(ErrorCode::InvalidJob, "target_duration_s must be positive");
  }
  if (fps < 1) throw Error(ErrorCode::InvalidJob, "fps must be at least 1");
  if (frame_count() < 1) {
    throw Error(ErrorCode::InvalidJob, "job renders zero frames",
                {{"target_duration_s", target_duration_s}, {"fps", fps}});
  }
}

std::string_view to_string(SessionState s) noexcept {
  switch (s) {
    case SessionState::AwaitingQuestion: return "AwaitingQuestion";
    case SessionState::Transcribing: return "Transcribing";
    case SessionState::GeneratingText: return "GeneratingText";
    case SessionState::GeneratingVideo: return "GeneratingVideo";
    case SessionState::Ready: return "Ready";
    case SessionState::Viewing: return "Viewing";
    case SessionState::Completed: return "Completed";
    case SessionState::Failed: return "Failed";
  }
  return "Failed";
}

std::string_view to_string(VeilState v) noexcept {
  switch (v) {
    case VeilState::MediumVisible: return "MediumVisible";
    case VeilState::Concealed: return "Concealed";
    case VeilState::ProphecyReady: return "ProphecyReady";
  }
  return "MediumVisible";
}

std::optional<SessionState> parse_session_state(std::string_view s) noexcept {
  for (SessionState state : kAllStates) {
    if (to_string(state) == s) return state;
  }
  return std::nullopt;
}

std::optional<VeilState> parse_veil_state(std::string_view s) noexcept {
  for (VeilState v : {VeilState::MediumVisible, VeilState::Concealed, VeilState::ProphecyReady}) {
    if (to_string(v) == s) return v;
  }
  return std::nullopt;
}

json timestamp_json(Timestamp t) { return format_rfc3339(t); }

Timestamp timestamp_from_json(const json& j) {
  if (!j.is_string()) throw Error(ErrorCode::ParseError, "timestamp must be a string");
  auto t = parse_rfc3339(j.get<std::string>());
  if (!t) throw Error(ErrorCode::ParseError, "bad RFC 3339 timestamp: " + j.get<std::string>());
  return *t;
}

void to_json(json& j, const SessionId& id) { j = id.str(); }

void from_json(const json& j, SessionId& id) {
  if (!j.is_string()) throw Error(ErrorCode::ParseError, "session id must be a string");
  auto parsed = SessionId::parse(j.get<std::string>());
  if (!parsed) throw Error(ErrorCode::ParseError, "bad session id: " + j.get<std::string>());
  id = *parsed;
}

void to_json(json& j, const TranslatedQuestion& q) {
  j = json{{"source_lang", q.source_lang},
           {"source_text", q.source_text},
           {"english_text", q.english_text}};
}

void from_json(const json& j, TranslatedQuestion& q) {
  require_object(j, "translated question");
  q = TranslatedQuestion::make(field<std::string>(j, "source_lang"),
                               field<std::string>(j, "source_text"),
                               field<std::string>(j, "english_text"));
}

void to_json(json& j, const PromptTemplate& t) {
  json shots = json::array();
  for (const auto& ex : t.few_shot) {
    shots.push_back({{"example_question", ex.question}, {"example_prophecy", ex.prophecy}});
  }
  j = json{{"preamble", t.preamble}, {"few_shot", std::move(shots)}, {"version", t.version}};
}

void from_json(const json& j, PromptTemplate& t) {
  require_object(j, "prompt template");
  t.preamble = field<std::string>(j, "preamble");
  t.version = field<int>(j, "version");
  t.few_shot.clear();
  for (const auto& ex : field<json>(j, "few_shot")) {
    t.few_shot.push_back({field<std::string>(ex, "example_question"),
                          field<std::string>(ex, "example_prophecy")});
  }
}

void to_json(json& j, const ProphecyText& p) {
  j = json{{"text", p.text},
           {"prompt_used", p.prompt_used},
           {"backend_id", p.backend_id},
           {"seed", p.seed}};
}

void from_json(const json& j, ProphecyText& p) {
  require_object(j, "prophecy");
  p.text = field<std::string>(j, "text");
  p.prompt_used = field<std::string>(j, "prompt_used");
  p.backend_id = field<std::string>(j, "backend_id");
  p.seed = field<std::uint64_t>(j, "seed");
  p.validate();
}

void to_json(json& j, const VideoJob& v) {
  j = json{{"prophecy", v.prophecy},
           {"target_duration_s", v.target_duration_s},
           {"fps", v.fps},
           {"seed", v.seed}};
}

void from_json(const json& j, VideoJob& v) {
  require_object(j, "video job");
  v.prophecy = field<ProphecyText>(j, "prophecy");
  v.target_duration_s = field<double>(j, "target_duration_s");
  v.fps = field<int>(j, "fps");
  v.seed = field<std::uint64_t>(j, "seed");
  v.validate();
}

void to_json(json& j, const VideoArtifact& v) {
  j = json{{"blob_ref", v.blob_ref},     {"duration_s", v.duration_s},
           {"fps", v.fps},               {"frame_count", v.frame_count},
           {"width", v.width},           {"height", v.height}};
}

void from_json(const json& j, VideoArtifact& v) {
  require_object(j, "video artifact");
  v.blob_ref = field<std::string>(j, "blob_ref");
  v.duration_s = field<double>(j, "duration_s");
  v.fps = field<int>(j, "fps");
  v.frame_count = field<int>(j, "frame_count");
  v.width = field<int>(j, "width");
  v.height = field<int>(j, "height");
}

void to_json(json& j, const ArchiveEntry& e) {
  j = json{{"id", e.id},
           {"prophecy_text", e.prophecy_text},
           {"video_ref", e.video_ref},
           {"created_at", timestamp_json(e.created_at)}};
}

void from_json(const json& j, ArchiveEntry& e) {
  require_object(j, "archive entry");
  e.id = field<SessionId>(j, "id");
  e.prophecy_text = field<std::string>(j, "prophecy_text");
  e.video_ref = field<std::string>(j, "video_ref");
  e.created_at = timestamp_from_json(field<json>(j, "created_at"));
}

void to_json(json& j, SessionState s) { j = std::string(to_string(s)); }

void from_json(const json& j, SessionState& s) {
  auto parsed = j.is_string() ? parse_session_state(j.get<std::string>()) : std::nullopt;
  if (!parsed) throw Error(ErrorCode::ParseError, "unknown session state");
  s = *parsed;
}

void to_json(json& j, VeilState v) { j = std::string(to_string(v)); }

void from_json(const json& j, VeilState& v) {
  auto parsed = j.is_string() ? parse_veil_state(j.get<std::string>()) : std::nullopt;
  if (!parsed) throw Error(ErrorCode::ParseError, "unknown veil state");
  v = *parsed;
}

}  // namespace hall
