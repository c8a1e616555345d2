#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace simplebev::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;

// args excludes the program name. Output goes to `out`, diagnostics to `err`.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int cli_main(const std::vector<std::string>& args);
int cli_main(int argc, char** argv);

}  // namespace simplebev::cli
