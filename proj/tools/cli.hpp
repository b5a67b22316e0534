#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "mercury/harvester.hpp"

namespace mercury::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

struct Context {
    /// Transport used by `harvest`; HttpTransport when null.
    std::shared_ptr<Transport> transport;
    /// Sleeper for harvest retries; real sleep when empty.
    Sleeper sleeper;
};

/// Runs one command line (args exclude the program name) and returns the
/// process exit code: 0 success, 1 operational error, 2 usage error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const Context& context = {});

} // namespace mercury::cli
