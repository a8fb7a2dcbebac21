#include <cstdio>
#include <string>

#include "CLI11.hpp"
#include "commands.hpp"
#include "moire/error.hpp"
#include "moire/parallel.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Coupled-chain SD-LDOS toolkit: forward images, inverse maps, twist operator, network surrogate"};
  app.require_subcommand(1);
  app.footer(moire::cli::config_key_help() +
             "Exit codes: 0 ok, 2 config/IO, 3 numeric failure, 4 inverse hypothesis violated, 5 training failure.");
  unsigned threads = 0;
  app.add_option("--threads", threads, "worker threads (default: all cores)");

  const std::pair<const char*, const char*> commands[] = {
      {"forward", "compute an LDOS image at theta"},
      {"invert", "recover (epsilon, t, nu, l) from an untwisted image"},
      {"twist", "apply the twist operator (inverse at 0, forward at theta_target)"},
      {"dataset", "generate (untwisted, twisted) image pairs"},
      {"train", "train the two-layer network on a dataset"},
      {"eval", "evaluate a trained network against ground truth and the twist operator"},
      {"bench", "quadrature/truncation convergence sweeps and the S^{-1} bound comparison"},
  };
  std::string config_path;
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("-c,--config", config_path, "JSON config file")->required();
    sub->add_option("--threads", threads, "worker threads (default: all cores)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  moire::set_thread_count(threads);
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    const auto cfg = moire::cli::load_config(command, config_path);
    moire::cli::run_command(cfg);
  } catch (const moire::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.exit_code();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 3;
  }
  return 0;
}
