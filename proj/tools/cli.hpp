#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace causalsem::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 1,
    kExitValidation = 2,
    kExitRuntime = 3,
};

inline constexpr const char* kOutDirEnv = "CAUSALSEM_OUT_DIR";
inline constexpr const char* kArtifactVersion = "0.1.0";

// Runs one invocation. args excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace causalsem::cli
