#pragma once

#include <iosfwd>

namespace boxrepair {

/// Exit codes: 0 success or repaired, 1 failed or unverified, 2 usage or parse error.
int cli_main(int argc, const char *const *argv, std::ostream &out, std::ostream &err);

} // namespace boxrepair
