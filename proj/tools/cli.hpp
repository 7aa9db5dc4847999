#pragma once

#include <string>
#include <vector>

namespace blocklite::cli {

// Exit codes: 0 success, 2 usage error, 3 missing prerequisite (map file or
// uncalibrated difficulty), 1 internal failure.
int run(const std::vector<std::string>& args);
int run(int argc, char** argv);

// Difficulty range expansion for --difficulties: "A.B:C.D" is the grid with
// L in A..C and M in B..D; comma-separated items and single points combine.
std::vector<std::string> expandDifficultyRange(const std::string& spec);

// Durations accept ms|s|m suffixes; a bare number is milliseconds.
double parseDurationMs(const std::string& text);

} // namespace blocklite::cli
