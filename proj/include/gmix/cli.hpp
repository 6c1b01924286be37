#pragma once

#include <string>

#include "gmix/models.hpp"

namespace gmix {

// Comma-separated numeric rows; `header` drops the first line and
// `label_col` (zero-based) moves that column into integer labels.
// Malformed input throws ConfigError naming the line and column.
Dataset load_csv(const std::string& path, bool header, int label_col);

// Entry point behind the `gmix` binary. Returns the process exit code:
// 0 success, 2 usage or validation failure, 3 numeric failure.
int run_cli(int argc, const char* const* argv);

}  // namespace gmix
