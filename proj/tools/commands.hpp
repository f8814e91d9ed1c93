#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "hodgeconv/complex.hpp"

namespace hodge::cli {

enum ExitCode : int {
  kOk = 0,
  kInternalError = 1,
  kInputError = 2,
  kDivergence = 3,
  kOracleLimit = 4,
};

/// Runs one subcommand (args exclude the program name) and returns its exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// builtin:path3|path4|grid|triangle|empty, a complex JSON, or a connectivity CSV/JSON binarized at `threshold`.
SimplicialComplex load_complex(const std::string& source, double threshold);

}  // namespace hodge::cli
