#include <optional>
#include <string>

#include <CLI11.hpp>

#include "paracool/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"paracool: mode structure, parametric coupling, and indirect "
                 "cooling toolkit for trapped-ion crystals"};
    std::string config_path;
    std::string out_path;
    long long seed = 0;
    app.add_option("--config", config_path, "JSON run configuration")->required();
    auto* out_opt = app.add_option("--out", out_path, "output file path");
    auto* seed_opt = app.add_option("--seed", seed, "random seed (overrides config)");
    CLI11_PARSE(app, argc, argv);

    std::optional<std::string> out;
    if (*out_opt) out = out_path;
    std::optional<long long> seed_override;
    if (*seed_opt) seed_override = seed;
    return paracool::cli::run_config_file(config_path, out, seed_override);
}
