#include "hall/backends/mock.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <condition_variable>
#include <mutex>
#include <numbers>
#include <thread>

#include "hall/backends/fixtures.hpp"
#include "hall/backends/frame_archive.hpp"

namespace hall {

namespace {

constexpr std::array<std::string_view, 10> kOpeners = {
    "You asked \"{q}\", and the Medium has listened.",
    "The stars heard \"{q}\" long before you spoke it.",
    "Of \"{q}\" the deity answers in silver and ash.",
    "\"{q}\" - the question ripples through the cosmic temple.",
    "Behind the veil, \"{q}\" is weighed against the tides of light.",
    "The Medium turns your words, \"{q}\", over like a stone in a river.",
    "Your voice carried \"{q}\" into the hall, and the hall replied.",
    "Ten thousand lanterns flicker at the sound of \"{q}\".",
    "The oracle tastes \"{q}\" and finds it bittersweet.",
    "Through the singularity, \"{q}\" returns to you transformed.",
};

constexpr std::array<std::string_view, 12> kVisions = {
    "A door of light opens beneath a sea of falling stars.",
    "A silver river climbs the mountain instead of leaving it.",
    "An orchard of glass trees rings softly in a wind you cannot feel.",
    "Two moons meet above a city that has not yet been built.",
    "A red thread winds through a library of unwritten books.",
    "The tide recedes and reveals a staircase made of old promises.",
    "A white bird carries a key across an ocean of static.",
    "A lantern burns at the bottom of a well that reflects the sky.",
    "Your shadow walks one step ahead, already smiling.",
    "A clock without hands blooms into a field of violet flowers.",
    "The temple ceiling dissolves into a spiral of patient galaxies.",
    "A bridge of whispers forms wherever you dare to stand.",
};

constexpr std::array<std::string_view, 12> kOmens = {
    "When three lanterns fade, a stranger will name what you have lost.",
    "Before the next new moon, a closed road will quietly reopen.",
    "What you release in spring will return to you in autumn, larger.",
    "A small refusal will become the hinge of a great door.",
    "The message you wait for is already folded in someone's pocket.",
    "An old song will guide your hands when words fail you.",
    "Beware the easy river; the harder current carries you home.",
    "A debt of kindness will be repaid in an unexpected currency.",
    "The fourth time you hesitate, leap.",
    "Seek the quiet voice in the crowded room.",
    "A mistake made in daylight will be forgiven by nightfall.",
    "What seems like an ending is only the deity turning a page.",
};

constexpr std::array<std::string_view, 10> kClosers = {
    "Walk gently; the answer is already walking toward you.",
    "So it is written in the circuitry of the heavens.",
    "The Medium falls silent, and the veil remembers.",
    "Trust the hour that feels most ordinary.",
    "Carry this prophecy lightly, and it will carry you.",
    "The rest is yours to interpret.",
    "Return when the stars have shifted, and ask again.",
    "Let the light you cannot see be the one that guides you.",
    "Nothing is fixed; everything is foretold.",
    "Go now, seeker; the temple will keep your question.",
};

constexpr std::array<std::string_view, 10> kQuestionNouns = {
    "fortune", "journey", "silence", "harvest", "horizon",
    "dream",   "shadow",  "river",   "season",  "promise",
};
constexpr std::array<std::string_view, 10> kQuestionAdjectives = {
    "wandering", "hidden",  "restless", "patient", "luminous",
    "forgotten", "distant", "gentle",   "uncertain", "eager",
};
constexpr std::array<std::string_view, 8> kQuestionSubjects = {
    "traveler", "heart", "seeker", "dreamer", "family", "city", "path", "spirit",
};

template <std::size_t N>
std::string_view pick(const std::array<std::string_view, N>& table, std::uint64_t h) {
  return table[h % N];
}

void apply_faults(const MockFaults& faults, int call_number, const StageContext& ctx) {
  if (faults.delay_s > 0.0) interruptible_sleep(faults.delay_s, ctx);
  ctx.check();
  if (faults.fail_first < 0 || call_number <= faults.fail_first) {
    throw Error(faults.fail_code, "scripted mock failure",
                {{"call", call_number}});
  }
}

// Truncates to at most `max_chars` code points without splitting a sequence.
std::string truncate_utf8(std::string_view s, std::size_t max_chars) {
  std::size_t chars = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if ((static_cast<unsigned char>(s[i]) & 0xc0) != 0x80) {
      if (chars == max_chars) return std::string(s.substr(0, i));
      ++chars;
    }
  }
  return std::string(s);
}

std::string trim(std::string_view s) {
  auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

struct Rgb {
  double r, g, b;
};

Rgb palette_color(std::uint64_t h) {
  return {static_cast<double>(h & 0xff), static_cast<double>((h >> 8) & 0xff),
          static_cast<double>((h >> 16) & 0xff)};
}

double unit(std::uint64_t h) { return static_cast<double>(h >> 11) * 0x1.0p-53; }

double smooth(double t) { return t * t * (3.0 - 2.0 * t); }

// Lattice of random values covering one frame for one noise octave.
class Lattice {
 public:
  Lattice(std::uint64_t seed, int cells_x, int cells_y, double offset_x, double offset_y,
          int width, int height) {
    const double step_x = static_cast<double>(cells_x) / width;
    const double step_y = static_cast<double>(cells_y) / height;
    const auto base_i = static_cast<long long>(std::floor(offset_x));
    const auto base_j = static_cast<long long>(std::floor(offset_y));
    cols_ = cells_x + 2;
    rows_ = cells_y + 2;
    values_.resize(static_cast<std::size_t>(cols_ * rows_));
    for (int j = 0; j < rows_; ++j) {
      for (int i = 0; i < cols_; ++i) {
        const auto gi = static_cast<std::uint64_t>(base_i + i);
        const auto gj = static_cast<std::uint64_t>(base_j + j);
        values_[static_cast<std::size_t>(j * cols_ + i)] =
            unit(splitmix64(seed ^ splitmix64(gi * 0x9e3779b97f4a7c15ULL ^ (gj << 32 | gj >> 32))));
      }
    }
    ix_.resize(static_cast<std::size_t>(width));
    wx_.resize(static_cast<std::size_t>(width));
    for (int x = 0; x < width; ++x) {
      double u = offset_x + x * step_x;
      double cell = std::floor(u);
      ix_[static_cast<std::size_t>(x)] = std::clamp(static_cast<int>(cell - static_cast<double>(base_i)), 0, cols_ - 2);
      wx_[static_cast<std::size_t>(x)] = smooth(u - cell);
    }
    iy_.resize(static_cast<std::size_t>(height));
    wy_.resize(static_cast<std::size_t>(height));
    for (int y = 0; y < height; ++y) {
      double v = offset_y + y * step_y;
      double cell = std::floor(v);
      iy_[static_cast<std::size_t>(y)] = std::clamp(static_cast<int>(cell - static_cast<double>(base_j)), 0, rows_ - 2);
      wy_[static_cast<std::size_t>(y)] = smooth(v - cell);
    }
  }

  double at(int x, int y) const {
    const int i = ix_[static_cast<std::size_t>(x)];
    const int j = iy_[static_cast<std::size_t>(y)];
    const double fx = wx_[static_cast<std::size_t>(x)];
    const double fy = wy_[static_cast<std::size_t>(y)];
    const double* row0 = &values_[static_cast<std::size_t>(j * cols_)];
    const double* row1 = row0 + cols_;
    const double top = row0[i] + (row0[i + 1] - row0[i]) * fx;
    const double bottom = row1[i] + (row1[i + 1] - row1[i]) * fx;
    return top + (bottom - top) * fy;
  }

 private:
  int cols_ = 0, rows_ = 0;
  std::vector<double> values_;
  std::vector<int> ix_, iy_;
  std::vector<double> wx_, wy_;
};

}  // namespace

CallCounter::Scope::Scope(CallCounter& c) : counter(c) {
  counter.calls_.fetch_add(1);
  int now = counter.in_flight_.fetch_add(1) + 1;
  int peak = counter.peak_.load();
  while (now > peak && !counter.peak_.compare_exchange_weak(peak, now)) {
  }
}

CallCounter::Scope::~Scope() { counter.in_flight_.fetch_sub(1); }

void interruptible_sleep(double seconds, const StageContext& ctx) {
  if (seconds <= 0.0) return;
  auto until = std::chrono::steady_clock::now() +
               std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                   std::chrono::duration<double>(seconds));
  until = std::min(until, ctx.deadline);
  std::mutex mu;
  std::condition_variable_any cv;
  std::unique_lock lock(mu);
  if (ctx.stop.stop_possible()) {
    cv.wait_until(lock, ctx.stop, until, [] { return false; });
  } else {
    cv.wait_until(lock, until, [] { return false; });
  }
}

std::string extract_final_question(std::string_view prompt) {
  std::size_t start = std::string_view::npos;
  if (auto at = prompt.rfind("\nQ: "); at != std::string_view::npos) {
    start = at + 4;
  } else if (prompt.starts_with("Q: ")) {
    start = 3;
  }
  if (start == std::string_view::npos) return trim(prompt);
  std::string_view rest = prompt.substr(start);
  if (auto end = rest.find("\nA:"); end != std::string_view::npos) rest = rest.substr(0, end);
  return trim(rest);
}

// ---------------------------------------------------------------------------
// Transcription
// ---------------------------------------------------------------------------

MockTranscribeBackend::MockTranscribeBackend(std::string id, MockFaults faults)
    : id_(std::move(id)), faults_(faults) {}

TranslatedQuestion MockTranscribeBackend::transcribe_translate(const AudioClip& clip,
                                                               std::uint64_t seed,
                                                               const StageContext& ctx) {
  CallCounter::Scope scope(counter_);
  apply_faults(faults_, counter_.calls(), ctx);

  if (std::all_of(clip.samples.begin(), clip.samples.end(), [](auto b) { return b == 0; })) {
    throw Error(ErrorCode::NoSpeechDetected, "audio is silent");
  }
  auto header = read_fixture_header(clip.samples);
  if (header && header->embedded) {
    const auto& e = *header->embedded;
    return TranslatedQuestion::make(e.lang, e.text, e.english.empty() ? e.text : e.english);
  }
  if (header) {
    if (const FixtureRow* row = find_fixture(header->key)) {
      return TranslatedQuestion::make(std::string(row->source_lang),
                                      std::string(row->source_text),
                                      std::string(row->english_text));
    }
  }

  const std::string digest = sha256_hex(clip.samples);
  std::uint64_t h = sha256_u64(digest + "\x1f" + std::to_string(seed));
  std::string sentence = "What ";
  sentence += pick(kQuestionNouns, splitmix64(h + 1));
  sentence += " awaits the ";
  sentence += pick(kQuestionAdjectives, splitmix64(h + 2));
  sentence += " ";
  sentence += pick(kQuestionSubjects, splitmix64(h + 3));
  if (header) sentence += " of " + header->key;
  sentence += "?";
  return TranslatedQuestion::make("en", sentence, sentence);
}

// ---------------------------------------------------------------------------
// Prophecy text
// ---------------------------------------------------------------------------

MockTextBackend::MockTextBackend(std::string id, MockFaults faults)
    : id_(std::move(id)), faults_(faults) {}

ProphecyText MockTextBackend::generate_prophecy(const std::string& prompt, std::uint64_t seed,
                                                const StageContext& ctx) {
  CallCounter::Scope scope(counter_);
  if (prompt.empty()) throw Error(ErrorCode::EmptyPrompt, "prompt is empty");
  apply_faults(faults_, counter_.calls(), ctx);

  std::string question = truncate_utf8(extract_final_question(prompt), kMaxQuestionChars);
  if (question.empty()) question = "...";
  const std::uint64_t h = sha256_u64(question + "\x1f" + std::to_string(seed));
  const int sentences = 2 + static_cast<int>(splitmix64(h) % 3);

  std::string opener(pick(kOpeners, splitmix64(h + 1)));
  std::string text = opener.replace(opener.find("{q}"), 3, question);
  if (sentences >= 3) {
    text += " ";
    text += pick(kVisions, splitmix64(h + 2));
  }
  if (sentences >= 4) {
    text += " ";
    text += pick(kOmens, splitmix64(h + 3));
  }
  text += " ";
  text += pick(kClosers, splitmix64(h + 4));

  ProphecyText out{std::move(text), prompt, id_, seed};
  out.validate();
  return out;
}

// ---------------------------------------------------------------------------
// Video
// ---------------------------------------------------------------------------

Bytes render_mock_archive(const VideoJob& job, int width, int height, const StageContext& ctx) {
  job.validate();
  if (width < 1 || height < 1 || width > 4096 || height > 4096) {
    throw Error(ErrorCode::InvalidJob, "frame size out of range");
  }
  const int frames = job.frame_count();
  const std::uint64_t base =
      sha256_u64(job.prophecy.text + "\x1f" + std::to_string(job.seed));

  std::array<Rgb, 4> palette{};
  for (std::size_t k = 0; k < palette.size(); ++k) {
    palette[k] = palette_color(splitmix64(base + 101 + k));
  }
  const double drift_x = (unit(splitmix64(base + 7)) * 2.0 - 1.0) * 0.8;  // cells per second
  const double drift_y = (unit(splitmix64(base + 8)) * 2.0 - 1.0) * 0.8;
  const double pulse_period = 2.0 + 4.0 * unit(splitmix64(base + 9));
  constexpr int kCoarseCells = 6;
  constexpr int kFineCells = 12;

  FrameManifest manifest{job.target_duration_s, job.fps, frames, width, height,
                         sha256_hex(job.prophecy.text)};
  StoredZipWriter zip;
  std::string manifest_text = json(manifest).dump();
  zip.add("manifest.json", as_bytes(manifest_text));

  Bytes rgb(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3);
  for (int f = 0; f < frames; ++f) {
    if (f % 16 == 0) ctx.check();
    const double t = static_cast<double>(f) / job.fps;
    const std::uint64_t fh = splitmix64(base ^ (static_cast<std::uint64_t>(f) * 0x9e3779b97f4a7c15ULL));
    const double wobble = (unit(fh) - 0.5) * 0.06;
    const Lattice coarse(base, kCoarseCells, kCoarseCells, drift_x * t + wobble,
                         drift_y * t - wobble, width, height);
    const Lattice fine(splitmix64(base + 11), kFineCells, kFineCells, -drift_y * 1.7 * t,
                       drift_x * 1.7 * t + wobble, width, height);
    const double brightness =
        0.8 + 0.2 * std::sin(2.0 * std::numbers::pi * t / pulse_period + unit(splitmix64(fh)));

    std::size_t p = 0;
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        double v = 0.65 * coarse.at(x, y) + 0.35 * fine.at(x, y);
        double pos = std::clamp(v, 0.0, 1.0) * 3.0;
        int stop = std::min(static_cast<int>(pos), 2);
        double frac = pos - stop;
        const Rgb& a = palette[static_cast<std::size_t>(stop)];
        const Rgb& b = palette[static_cast<std::size_t>(stop + 1)];
        rgb[p++] = static_cast<std::uint8_t>(std::clamp((a.r + (b.r - a.r) * frac) * brightness, 0.0, 255.0));
        rgb[p++] = static_cast<std::uint8_t>(std::clamp((a.g + (b.g - a.g) * frac) * brightness, 0.0, 255.0));
        rgb[p++] = static_cast<std::uint8_t>(std::clamp((a.b + (b.b - a.b) * frac) * brightness, 0.0, 255.0));
      }
    }
    Bytes ppm = encode_ppm(width, height, rgb);
    zip.add(frame_entry_name(f), ppm);
  }
  return zip.finish();
}

MockVideoBackend::MockVideoBackend(std::shared_ptr<BlobStore> blobs, VideoSettings settings,
                                   std::string id, MockFaults faults)
    : blobs_(std::move(blobs)), settings_(settings), id_(std::move(id)), faults_(faults) {}

VideoArtifact MockVideoBackend::render_video(const VideoJob& job, const StageContext& ctx) {
  CallCounter::Scope scope(counter_);
  apply_faults(faults_, counter_.calls(), ctx);
  job.validate();
  if (settings_.simulated_rate > 0.0) {
    interruptible_sleep(settings_.simulated_rate * job.target_duration_s, ctx);
    ctx.check();
  }
  Bytes archive = render_mock_archive(job, settings_.width, settings_.height, ctx);
  VideoArtifact artifact;
  artifact.blob_ref = blobs_->put(archive);
  artifact.duration_s = job.target_duration_s;
  artifact.fps = job.fps;
  artifact.frame_count = job.frame_count();
  artifact.width = settings_.width;
  artifact.height = settings_.height;
  return artifact;
}

}  // namespace hall
