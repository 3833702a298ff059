#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <json.hpp>

namespace geostyle::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitUsage = 2;

/// Runs one command line. Results go to out, JSON errors to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// JSON text with every floating value printed as %.17g.
std::string format_json(const nlohmann::json& j, int indent = 2);

/// Subcommand paths, e.g. "loss", "metrics psnr".
std::vector<std::string> subcommands();

} // namespace geostyle::cli
