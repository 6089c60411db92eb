#pragma once

// Command-line front end. Kept as a library so tests can drive it in-process.
//
// Exit codes: 0 success, 1 usage or input error, 2 numerical failure (the
// failing invariant is named on the error stream).

#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace pnpgl::cli {

inline constexpr const char* kVersion = "0.1.0";

// args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Flat key=value text: one pair per line, '#' starts a comment, blank lines
// are skipped. Throws ParseError on malformed lines or repeated keys.
std::map<std::string, std::string> parse_config_text(const std::string& text);

// Manifest lines as key=value pairs, in file order.
std::vector<std::pair<std::string, std::string>> parse_manifest(const std::string& text);

}  // namespace pnpgl::cli
