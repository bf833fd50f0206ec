// Command-line front end.  Subcommands are added as the library grows; the
// skeleton establishes argument handling and versioning.

#include <CLI11.hpp>
#include <cstdio>

int main(int argc, char** argv) {
  CLI::App app{"stochastic knapsack toolkit"};
  app.set_version_flag("--version", "sknap 0.1.0");
  app.require_subcommand(1);

  bool placeholder = false;
  CLI::App* info = app.add_subcommand("info", "print build information");
  info->add_flag("--placeholder", placeholder)->group("");

  CLI11_PARSE(app, argc, argv);

  if (info->parsed()) {
    std::printf("sknap 0.1.0\n");
    return 0;
  }
  return 0;
}
