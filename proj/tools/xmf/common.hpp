#pragma once

#include <CLI11.hpp>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include "xmf/error.hpp"
#include "xmf/provenance.hpp"

namespace xmf::cli {

enum ExitCode : int { kOk = 0, kInternal = 1, kInvalidArgs = 2, kIoError = 3, kAllFailed = 4 };

struct Globals {
  std::uint64_t seed = 0;
  int workers = 1;
  std::string config;
  bool verbose = false;
};

// Reads nested JSON objects as CLI11 configuration: top-level keys are
// global options, objects map onto (sub)subcommands.
class JsonConfig : public CLI::Config {
 public:
  std::string to_config(const CLI::App* app, bool default_also, bool write_description,
                        std::string prefix) const override;
  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override;
};

// Canonical "name=value" listing of every option along the selected
// subcommand chain, skipping workers/verbose/config and output locations.
std::string canonical_config(const CLI::App& app);

Provenance make_provenance(const CLI::App& app, const Globals& globals);

// Path of `target` relative to the directory `base`; both made absolute.
std::string relative_to(const std::filesystem::path& target, const std::filesystem::path& base);

// Resolves a manifest entry against the manifest's directory.
std::filesystem::path resolve(const std::filesystem::path& base, const std::string& entry);

void require_dir(const std::filesystem::path& dir);
void require_file(const std::filesystem::path& file);
void ensure_dir(const std::filesystem::path& dir);

int exit_code_for(ErrorCode code);

class Log {
 public:
  explicit Log(bool verbose) : verbose_(verbose) {}
  template <typename... Args>
  void info(const Args&... args) const {
    if (!verbose_) return;
    ((std::cerr << args), ...);
    std::cerr << '\n';
  }
  template <typename... Args>
  void warn(const Args&... args) const {
    std::cerr << "warning: ";
    ((std::cerr << args), ...);
    std::cerr << '\n';
  }

 private:
  bool verbose_;
};

// Register a subcommand; its callback stores the exit status in exit_code.
void add_synth(CLI::App& app, const Globals& globals, int& exit_code);
void add_tracks(CLI::App& app, const Globals& globals, int& exit_code);
void add_fit(CLI::App& app, const Globals& globals, int& exit_code);
void add_eval(CLI::App& app, const Globals& globals, int& exit_code);

}  // namespace xmf::cli
