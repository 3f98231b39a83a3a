#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace shadowrec::cli {

// Exit codes shared by every subcommand.
enum ExitCode : int {
    kOk = 0,
    kFailure = 1,
    kUsage = 2,     // bad flags, invalid configuration
    kIo = 3,        // unreadable or unwritable files
    kBadInput = 4,  // malformed input files
    kPipeline = 5,  // numerical or pipeline failures
    kLookup = 6,    // unknown external ids
};

/// Runs the `shadowrec` command line. args[0] is the program name. Data goes
/// to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace shadowrec::cli
