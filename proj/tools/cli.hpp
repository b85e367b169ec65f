#pragma once

#include <ostream>

namespace drivesig::cli {

// Exit codes: 0 ok, 1 usage, 2 data or model-file error, 3 training error.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace drivesig::cli
