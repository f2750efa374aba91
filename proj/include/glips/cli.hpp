#pragma once

#include <iosfwd>

namespace glips::cli {

// Environment variable naming the default backend (manifest path or
// fixture:<seed>).
inline constexpr const char* kModelEnvVar = "GLIPS_MODEL";

enum ExitCode : int { Ok = 0, Internal = 1, InputError = 2, BackendError = 3 };

// Entry point behind the `glips` executable. Subcommands: score, rescale,
// evaluate, sweep, inspect-attention.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace glips::cli
