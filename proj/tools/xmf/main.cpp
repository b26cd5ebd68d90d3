#include <iostream>

#include "common.hpp"

int main(int argc, char** argv) {
  using namespace xmf::cli;
  CLI::App app{"Cross-modality matching data tools: synthesis, tracks, fitting and evaluation.", "xmf"};
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", xmf::tool_version());

  Globals globals;
  app.add_option("--seed", globals.seed, "Run seed recorded in every output");
  app.add_option("--workers", globals.workers, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--verbose,-v", globals.verbose, "Log progress to stderr");
  app.config_formatter(std::make_shared<JsonConfig>());
  app.set_config("--config", "", "JSON file with option values (nested by subcommand)");

  int exit_code = kOk;
  add_synth(app, globals, exit_code);
  add_tracks(app, globals, exit_code);
  add_fit(app, globals, exit_code);
  add_eval(app, globals, exit_code);

  try {
    app.parse(argc, argv);
  } catch (const CLI::FileError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kInvalidArgs;
  } catch (const xmf::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_code_for(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInternal;
  }
  return exit_code;
}
