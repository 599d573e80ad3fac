#ifndef ADVSHAPE_CLI_HPP
#define ADVSHAPE_CLI_HPP

#include <ostream>
#include <string>
#include <vector>

namespace advshape {

/// Entry point behind the advshape binary. args excludes the program name.
/// Exit codes: 0 success, 1 attack failure, 2 usage, 3 model file,
/// 4 dataset/data, 5 filesystem.
int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace advshape

#endif  // ADVSHAPE_CLI_HPP
