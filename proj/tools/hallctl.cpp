// hallctl: drive visitor sessions, generate fixture audio, run load tests
// and inspect the prophecy archive.

#include <CLI11.hpp>

#include <iostream>

#include "hall/client/commands.hpp"

namespace {

void add_embedded_flags(CLI::App* cmd, hall::EmbeddedOptions& e) {
  cmd->add_option("--data-dir", e.data_dir, "Embedded server data directory (default: temp)");
  cmd->add_option("--simulated-rate", e.simulated_rate,
                  "Embedded mock render seconds per video second")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--video-concurrency", e.video_concurrency, "Embedded concurrent renders")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--capacity", e.capacity, "Embedded live session cap")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--width", e.width, "Embedded video width")->check(CLI::Range(1, 4096));
  cmd->add_option("--height", e.height, "Embedded video height")->check(CLI::Range(1, 4096));
  cmd->add_option("--duration", e.duration_s, "Embedded video seconds")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--fps", e.fps, "Embedded video frame rate")->check(CLI::PositiveNumber);
  cmd->add_option("--retry-after-max", e.retry_after_max_s,
                  "Embedded cap on the Retry-After hint")
      ->check(CLI::NonNegativeNumber);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Operator and test client for the oracle server"};
  app.require_subcommand(1);

  hall::AskOptions ask;
  auto* ask_cmd = app.add_subcommand("ask", "Ask one question and watch the prophecy");
  auto* ask_server = ask_cmd->add_option("--server", ask.server, "Server base URL");
  auto* ask_embedded =
      ask_cmd->add_flag("--embedded", ask.embedded, "Run against an in-process server");
  ask_server->excludes(ask_embedded);
  auto* ask_fixture = ask_cmd->add_option("--fixture", ask.fixture, "Fixture key to synthesize");
  auto* ask_file = ask_cmd->add_option("--file", ask.file, "WAV file to upload")
                       ->check(CLI::ExistingFile);
  ask_fixture->excludes(ask_file);
  ask_cmd->add_option("--seed", ask.seed, "Session seed");
  ask_cmd->add_option("--out", ask.out, "Where to write the frame archive (prophecy.zip)");
  ask_cmd->add_option("--timeout", ask.poll_timeout_s, "Seconds to wait for the prophecy");
  add_embedded_flags(ask_cmd, ask.embedded_options);

  hall::LoadOptions load;
  auto* load_cmd = app.add_subcommand("load", "Run many sessions and report latencies");
  auto* load_server = load_cmd->add_option("--server", load.server, "Server base URL");
  auto* load_embedded =
      load_cmd->add_flag("--embedded", load.embedded, "Run against an in-process server");
  load_server->excludes(load_embedded);
  load_cmd->add_option("--sessions", load.sessions, "Sessions to run")
      ->required()
      ->check(CLI::PositiveNumber);
  load_cmd->add_option("--concurrency", load.concurrency, "Sessions in flight")
      ->required()
      ->check(CLI::PositiveNumber);
  load_cmd->add_option("--seed", load.seed, "Base seed; session i uses seed + i");
  load_cmd->add_option("--timeout", load.poll_timeout_s, "Seconds to wait per session");
  add_embedded_flags(load_cmd, load.embedded_options);

  hall::FixtureOptions fixture;
  auto* fixture_cmd = app.add_subcommand("fixture", "Write a fixture WAV");
  fixture_cmd->add_option("--key", fixture.key, "Fixture key")->required();
  fixture_cmd->add_option("--text", fixture.text, "Question text to embed");
  fixture_cmd->add_option("--lang", fixture.lang, "Language tag of --text");
  fixture_cmd->add_option("--english", fixture.english, "English translation of --text");
  fixture_cmd->add_option("--out", fixture.out, "Output WAV path")->required();
  fixture_cmd->add_option("--rate", fixture.sample_rate_hz, "Sample rate")
      ->check(CLI::IsMember({16000, 44100, 48000}));

  hall::ArchiveLsOptions ls;
  auto* archive_cmd = app.add_subcommand("archive", "Inspect the prophecy archive");
  archive_cmd->require_subcommand(1);
  auto* ls_cmd = archive_cmd->add_subcommand("ls", "List archived prophecies");
  ls_cmd->add_option("--server", ls.server, "Server base URL")->required();
  ls_cmd->add_option("--page-size", ls.limit, "Entries per request")->check(CLI::Range(1, 100));
  ls_cmd->add_flag("--json", ls.as_json, "Print JSON instead of a table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (*ask_cmd) {
    if (ask.server.empty() && !ask.embedded) {
      std::cerr << "hallctl ask: one of --server or --embedded is required\n";
      return 2;
    }
    return hall::run_ask(ask, std::cout, std::cerr);
  }
  if (*load_cmd) {
    if (load.server.empty() && !load.embedded) {
      std::cerr << "hallctl load: one of --server or --embedded is required\n";
      return 2;
    }
    return hall::run_load_command(load, std::cout, std::cerr);
  }
  if (*fixture_cmd) return hall::run_fixture(fixture, std::cout, std::cerr);
  if (*ls_cmd) return hall::run_archive_ls(ls, std::cout, std::cerr);
  return 2;
}
