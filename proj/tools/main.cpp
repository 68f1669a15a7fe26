// nue: command-line runner for the tower pipeline.
#include <chrono>
#include <cstdlib>
#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"
#include "nue/errors.hpp"
#include "nue/parallel.hpp"

#ifndef NUE_VERSION
#define NUE_VERSION "0.0.0"
#endif

int main(int argc, char** argv) {
  using namespace nue;
  CLI::App app{"Induced Markov maps for non-uniformly expanding one-dimensional maps"};
  app.set_version_flag("--version", NUE_VERSION);
  std::string subcommand, config, output;
  cli::CommandOptions opt;
  std::size_t threads = 0;
  app.add_option("command", subcommand, "times|nested|tower|tails|density|corr|repeller|verify")
      ->required()
      ->check(CLI::IsMember({"times", "nested", "tower", "tails", "density", "corr", "repeller", "verify"}));
  app.add_option("config", config, "run configuration file")->required();
  app.add_option("--threads", threads, "worker cap (0: hardware concurrency)");
  app.add_option("-o,--output", output, "output directory (overrides NUE_OUTPUT_DIR and [run] output)");
  app.add_option("--atoms", opt.atoms, "verify: atom CSV to check");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  set_max_threads(threads);

  cli::RunContext ctx;
  ctx.subcommand = subcommand;
  ctx.config_path = config;
  auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(); };
  try {
    ctx.stage = "cli";
    ctx.cfg = ConfigFile::load(config);
    if (!output.empty()) ctx.out_dir = output;
    else if (const char* env = std::getenv("NUE_OUTPUT_DIR"); env && *env) ctx.out_dir = env;
    else ctx.out_dir = ctx.cfg.get_string("run", "output", "nue_out/" + subcommand);
    ctx.manifest["tool"] = "nue";
    ctx.manifest["version"] = NUE_VERSION;
    ctx.manifest["subcommand"] = subcommand;
    ctx.manifest["config"] = config;
    ctx.manifest["threads"] = max_threads();
    if (ctx.cfg.has("run", "seed")) ctx.manifest["seed"] = ctx.seed();

    int status = 0;
    try {
      status = cli::run_command(ctx, opt);
      ctx.manifest["status"] = "ok";
    } catch (const cli::VerificationFailure& f) {
      ctx.manifest["status"] = "verification failed";
      ctx.manifest["failure"] = f.what;
      std::cerr << "nue " << subcommand << ": verification failed: " << f.what << "\n";
      status = 1;
    }
    ctx.finish(elapsed());
    std::cout << "nue " << subcommand << ": wrote " << ctx.outputs.size() << " files to " << ctx.out_dir << "\n";
    return status;
  } catch (const Error& e) {
    bool config_error = e.kind() == ErrorKind::ConfigError;
    std::cerr << "nue " << subcommand << ": " << (config_error ? "config error" : "error in " + ctx.stage) << ": "
              << e.what() << "\n";
    return config_error ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "nue " << subcommand << ": error in " << ctx.stage << ": " << e.what() << "\n";
    return 1;
  }
}
