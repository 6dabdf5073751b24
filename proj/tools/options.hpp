#pragma once

#include <string>
#include <utility>
#include <vector>

namespace ialf::cli {

/// Reads a flat `key = value` file.  '#' starts a comment; blank lines are
/// ignored.  Keys may be written with or without the leading dashes.
std::vector<std::pair<std::string, std::string>> read_config_file(const std::string& path);

/// Rewrites argv so that config-file settings come right after the subcommand
/// name and before anything typed on the command line; with last-wins option
/// policies the command line therefore overrides the file.
std::vector<std::string> inject_config(const std::vector<std::string>& args);

std::vector<double> parse_doubles(const std::string& text);
std::vector<int> parse_ints(const std::string& text);

/// "lo:hi" or "lo:hi:step" ranges, or a comma list.
std::vector<double> parse_grid(const std::string& text);

/// "n:K" pairs separated by commas, e.g. "2:1,2:2".
std::vector<std::pair<int, int>> parse_pairs(const std::string& text);

}  // namespace ialf::cli
