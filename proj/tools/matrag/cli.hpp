#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include "matrag/config.hpp"

namespace matrag::cli {

// Parses argv and runs one subcommand. Data goes to `out`, diagnostics to
// `err`. Returns the process exit status.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

// Config file, then MATRAG_* environment, then per-field overrides. Relative
// paths in the file resolve against the file's directory.
PipelineConfig resolve_config(const std::string& config_path,
                              const std::map<std::string, std::string>& overrides);

}  // namespace matrag::cli
