#ifndef FSHT_TOOLS_CLI_HPP
#define FSHT_TOOLS_CLI_HPP

#include <iosfwd>

namespace fsht::cli {

enum ExitCode
{
    exit_ok          = 0,
    exit_usage       = 1,
    exit_verify_fail = 2
};

int run(int argc, const char * const * argv, std::ostream & out, std::ostream & err);

} // namespace fsht::cli

#endif // FSHT_TOOLS_CLI_HPP
