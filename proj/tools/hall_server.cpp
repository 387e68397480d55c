// hall-server: the oracle HTTP server.

#include <CLI11.hpp>

#include <csignal>
#include <iostream>
#include <thread>

#include "hall/api/server.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Oracle server: sessions, generation pipeline and prophecy archive"};
  std::optional<std::filesystem::path> config_path;
  std::optional<std::string> listen;
  std::optional<std::filesystem::path> data_dir;
  bool print_config = false;
  app.add_option("-c,--config", config_path, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--listen", listen, "host:port (overrides config and HALL_LISTEN)");
  app.add_option("--data-dir", data_dir, "Data directory (overrides config and HALL_DATA_DIR)");
  app.add_flag("--print-config", print_config, "Print the effective config and exit");
  CLI11_PARSE(app, argc, argv);

  hall::ServerConfig config;
  try {
    config = hall::ServerConfig::load(config_path);
    config.apply_env();
    if (listen) {
      config.apply_env([&](const std::string& name) -> std::optional<std::string> {
        if (name == "HALL_LISTEN") return *listen;
        return std::nullopt;
      });
    }
    if (data_dir) config.data_dir = *data_dir;
    config.validate();
  } catch (const std::exception& e) {
    std::cerr << "hall-server: " << e.what() << '\n';
    return 2;
  }

  if (print_config) {
    std::cout << hall::json(config).dump(2) << '\n';
    return 0;
  }

  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  try {
    hall::OracleServer server(config);
    std::thread waiter([&] {
      int sig = 0;
      sigwait(&signals, &sig);
      server.stop();
    });
    struct WakeWaiter {
      std::thread& t;
      ~WakeWaiter() {
        pthread_kill(t.native_handle(), SIGTERM);
        t.join();
      }
    } wake{waiter};
    server.run();
  } catch (const std::exception& e) {
    std::cerr << "hall-server: " << e.what() << '\n';
    return 1;
  }
  std::cerr << "hall-server: stopped\n";
  return 0;
}
