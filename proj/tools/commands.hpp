#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "config.hpp"

namespace rdcert::app {

// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 1;    ///< bad input, solver failure, inconclusive
inline constexpr int kExitFailed = 2;   ///< criterion evaluated and not satisfied

struct CommandResult {
  int code = kExitOk;
  json report;
};

CommandResult cmd_certify(const RunConfig& cfg, std::ostream& out);
CommandResult cmd_threshold(const RunConfig& cfg, std::ostream& out);
CommandResult cmd_compare(const RunConfig& cfg, std::ostream& out);
/// csv_path may be empty.
CommandResult cmd_simulate_pde(const RunConfig& cfg, const std::string& csv_path, std::ostream& out);
CommandResult cmd_simulate_net(const RunConfig& cfg, const std::string& csv_path, std::ostream& out);
CommandResult cmd_spectral(const SpatialSpec& spatial, std::ostream& out);

/// Full command line, argv[0] included.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rdcert::app
