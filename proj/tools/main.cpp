#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
  using namespace osmm::cli;
  CLI::App app{"Ordered-subset diffusion reconstruction for sparse-view CT"};
  app.require_subcommand(1);
  app.fallthrough();

  std::optional<std::string> config_file;
  Overrides flags;
  app.add_option("--config", config_file, "JSON run config; unset keys take built-in defaults");
  app.add_option("--seed", flags.seed, "run seed (reconstruction noise, training)");
  app.add_option("--out-dir", flags.out_dir, "output directory");
  app.add_option("--views", flags.views, "views kept when subsampling");
  app.add_option("--subsets", flags.subsets, "number of ordered subsets N");
  app.add_option("--variant", flags.variant, "OSMM, MSDM-only, OWDM-only or FBP-only");
  app.add_option("--steps", flags.steps, "diffusion steps T");
  bool print_config = false;
  app.add_flag("--print-config", print_config, "print the resolved config and exit");

  const char* help[] = {"write a phantom image",         "forward project an image",
                        "keep uniformly spaced views",   "train score networks on the reference set",
                        "reconstruct a subsampled sinogram", "compare two images",
                        "sweep variants, view counts and subset counts", "pivot an ablation CSV into tables"};
  for (std::size_t i = 0; i < command_names().size(); ++i) app.add_subcommand(command_names()[i], help[i]);

  CLI11_PARSE(app, argc, argv);
  const std::string command = app.get_subcommands().front()->get_name();
  try {
    std::optional<std::filesystem::path> file;
    if (config_file) file = *config_file;
    const RunConfig cfg = load_run_config(file, flags);
    if (print_config) {
      std::cout << cfg.resolved.dump(2) << '\n';
      return 0;
    }
    run_command(command, cfg, std::cout);
  } catch (const osmm::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << command << " failed: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
