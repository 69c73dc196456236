#pragma once

#include <iosfwd>

namespace slicetrack::cli {

// Exit statuses.
inline constexpr int kOk = 0;
inline constexpr int kError = 1;
inline constexpr int kIngestionError = 2;
inline constexpr int kSeedError = 3;
inline constexpr int kWriteError = 4;
inline constexpr int kEvaluationError = 5;
inline constexpr int kConfigError = 6;

/// Runs `slicetrack <subcommand> ...` with the given streams. Subcommands:
/// detect, track, evaluate, reconstruct, serve.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace slicetrack::cli
