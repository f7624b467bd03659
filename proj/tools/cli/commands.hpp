#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include <krrinf/simlab.hpp>

namespace krrinf::cli {

/// A validated config document plus the command-line overrides.
struct RunContext {
  nlohmann::json doc = nlohmann::json::object();
  std::filesystem::path base_dir = ".";
  std::optional<std::uint64_t> seed;
  int workers = 1;
  std::optional<std::filesystem::path> out;

  /// Resolves a path from the config against the config file's directory.
  std::filesystem::path resolve(const std::string& p) const;
  std::uint64_t seed_or(std::uint64_t fallback) const;
};

/// Parses and schema-validates a config document. Throws ConfigError listing
/// every violation with its JSON pointer.
nlohmann::json parse_config_text(const std::string& text, const std::string& source);
RunContext load_context(const std::optional<std::filesystem::path>& config_path,
                        std::optional<std::uint64_t> seed, std::optional<int> workers,
                        std::optional<std::filesystem::path> out);

/// Scenario described by the "scenario" block.
Scenario parse_scenario(const nlohmann::json& block, std::uint64_t seed);

int cmd_fit(const RunContext& ctx, std::ostream& out, std::ostream& err);
int cmd_infer(const RunContext& ctx, std::ostream& out, std::ostream& err);
int cmd_optimum(const RunContext& ctx, std::ostream& out, std::ostream& err);
int cmd_simulate(const RunContext& ctx, std::ostream& out, std::ostream& err);
int cmd_rates(const RunContext& ctx, std::ostream& out, std::ostream& err);
int cmd_qq(const RunContext& ctx, std::ostream& out, std::ostream& err);
int cmd_extrema(const RunContext& ctx, std::ostream& out, std::ostream& err);

/// Full command-line entry point; maps exceptions to the documented exit codes
/// (0 success, 2 config or schema error, 3 data error, 4 numerical failure).
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace krrinf::cli
