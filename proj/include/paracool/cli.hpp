#pragma once

#include <optional>
#include <string>

namespace paracool::cli {

inline constexpr const char* kToolVersion = "0.1.0";

/// Exit codes: 0 success, 2 config/validation failure, 3 fit non-convergence
/// (result still written with converged=false).
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNoConvergence = 3;

/// Run one batch command from a JSON config file. `out_override` and
/// `seed_override` take precedence over the config's "out" and "seed".
/// Diagnostics go to stderr; returns an exit code.
int run_config_file(const std::string& config_path,
                    const std::optional<std::string>& out_override = {},
                    const std::optional<long long>& seed_override = {});

/// Same, from config text (for tests).
int run_config_text(const std::string& config_json,
                    const std::optional<std::string>& out_override = {},
                    const std::optional<long long>& seed_override = {});

} // namespace paracool::cli
