#include "common.hpp"

#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

namespace xmf::cli {

using nlohmann::json;

namespace {

void flatten(const json& j, std::vector<std::string>& parents, std::vector<CLI::ConfigItem>& out) {
  for (const auto& [key, value] : j.items()) {
    if (value.is_object()) {
      parents.push_back(key);
      flatten(value, parents, out);
      parents.pop_back();
      continue;
    }
    CLI::ConfigItem item;
    item.parents = parents;
    item.name = key;
    auto scalar = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
    if (value.is_array()) {
      for (const auto& v : value) item.inputs.push_back(scalar(v));
    } else if (value.is_boolean()) {
      item.inputs.push_back(value.get<bool>() ? "true" : "false");
    } else {
      item.inputs.push_back(scalar(value));
    }
    out.push_back(std::move(item));
  }
}

const std::set<std::string>& unhashed_options() {
  static const std::set<std::string> names{"--workers", "--verbose", "--config", "--out", "--anchors-out", "--help"};
  return names;
}

void collect(const CLI::App& app, const std::string& prefix, std::vector<std::string>& lines) {
  for (const CLI::Option* opt : app.get_options()) {
    const std::string name = opt->get_name();
    if (name.empty() || unhashed_options().count(name)) continue;
    std::string value;
    if (opt->count() > 0) {
      value = CLI::detail::join(opt->results(), ",");
    } else {
      value = opt->get_default_str();
    }
    lines.push_back(prefix + name + "=" + value);
  }
  for (const CLI::App* sub : app.get_subcommands()) collect(*sub, prefix + sub->get_name() + ".", lines);
}

}  // namespace

std::string JsonConfig::to_config(const CLI::App*, bool, bool, std::string) const { return "{}"; }

std::vector<CLI::ConfigItem> JsonConfig::from_config(std::istream& input) const {
  json j;
  try {
    input >> j;
  } catch (const json::exception& e) {
    throw CLI::ConversionError(std::string("malformed JSON config: ") + e.what());
  }
  if (!j.is_object()) throw CLI::ConversionError("JSON config must be an object");
  std::vector<CLI::ConfigItem> items;
  std::vector<std::string> parents;
  flatten(j, parents, items);
  return items;
}

std::string canonical_config(const CLI::App& app) {
  std::vector<std::string> lines;
  collect(app, "", lines);
  std::string out;
  for (const auto& l : lines) out += l + "\n";
  return out;
}

Provenance make_provenance(const CLI::App& app, const Globals& globals) {
  Provenance p;
  p.seed = globals.seed;
  p.config_hash = config_hash(canonical_config(app));
  return p;
}

std::string relative_to(const std::filesystem::path& target, const std::filesystem::path& base) {
  const auto t = std::filesystem::absolute(target).lexically_normal();
  const auto b = std::filesystem::absolute(base).lexically_normal();
  auto rel = t.lexically_relative(b);
  return rel.empty() ? t.generic_string() : rel.generic_string();
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& entry) {
  const std::filesystem::path p(entry);
  return p.is_absolute() ? p : base / p;
}

void require_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) fail(ErrorCode::IoFailure, "no such directory: " + dir.string());
}

void require_file(const std::filesystem::path& file) {
  if (!std::filesystem::is_regular_file(file)) fail(ErrorCode::IoFailure, "no such file: " + file.string());
}

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::IoFailure, "cannot create " + dir.string() + ": " + ec.message());
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return kInvalidArgs;
    case ErrorCode::IoFailure:
    case ErrorCode::ManifestInvalid:
    case ErrorCode::MissingAuxiliary: return kIoError;
    default: return kInternal;
  }
}

}  // namespace xmf::cli
