#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace snicpath {

// Entry point behind the snicpath binary; exposed so tests can drive the
// command surface in-process. Exit codes: 0 success, 1 validation or parse
// error, 2 fixture-check failure.
int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err);

// FNV-1a content hash used in run manifests to make outputs attributable.
std::string content_hash_hex(const std::string& bytes);

}  // namespace snicpath
