#pragma once

#include <iosfwd>

namespace uromt::cli {

/// Entry point of the `uromt` command. Returns 0 on success, 2 on usage errors
/// and 1 on runtime failures.
int run(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace uromt::cli
