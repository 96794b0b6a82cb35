#pragma once

#include <iosfwd>

namespace npw {

// Entry point of the npw tool. Results go to out (or --out), diagnostics to
// err. Returns 0 on success, 1 on usage errors, 2 on data errors and 3 when
// an estimate is undefined on the given data.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace npw
