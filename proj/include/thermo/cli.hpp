#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace thermo::cli {

// Process exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 2;
inline constexpr int kExitSchema = 3;
inline constexpr int kExitConfig = 4;

// Runs `thermoward <subcommand> ...`; args excludes the program name.
// Never throws; errors are reported on err and mapped to an exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace thermo::cli
