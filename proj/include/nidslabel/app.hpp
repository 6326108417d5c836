#pragma once

#include <iosfwd>

namespace nidslabel {

inline constexpr const char* kVersion = "0.1.0";

// Command-line entry point. Returns 0 on success, 1 on usage or validation
// errors and 2 on runtime or transport errors.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace nidslabel
