#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tissuemix::cli {

struct ConfigEntry {
    std::size_t line = 0;
    std::string key;
    std::string value;
};

/// Parses `key = value` lines; `#` starts a comment, blank lines are ignored,
/// dashes in keys are read as underscores. Errors name the line; a key may
/// appear only once.
std::vector<ConfigEntry> parse_config_text(const std::string& text);

/// Runs one subcommand. Exit codes: 0 success, 1 invalid input, 2 runtime or I/O failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tissuemix::cli
