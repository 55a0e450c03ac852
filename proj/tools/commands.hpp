#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "run_config.hpp"

namespace osmm::cli {

const std::vector<std::string>& command_names();

/// Runs one pipeline command and writes manifest_<command>.json into the
/// output directory. Progress and warnings go to `log`.
void run_command(const std::string& command, const RunConfig& cfg, std::ostream& log);

}  // namespace osmm::cli
