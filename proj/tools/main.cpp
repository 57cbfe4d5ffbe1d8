#include <cstdio>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "gradgeom/config.hpp"
#include "gradgeom/runner.hpp"

// Experiment runner: each experiment is one subcommand
// driven by a JSON config, re-runnable bit for bit from the seed.
int main(int argc, char** argv) {
    CLI::App app{"gradient-geometry toolkit"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::string outdir;
    for (const std::string& name : gradgeom::known_subcommands()) {
        CLI::App* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON config file")->required();
        sub->add_option("--set", overrides, "key.path=value override (repeatable)");
        sub->add_option("--out", outdir, "output directory (default: config output.path)");
    }

    CLI11_PARSE(app, argc, argv);

    const std::vector<CLI::App*> parsed = app.get_subcommands();
    if (parsed.size() != 1) return gradgeom::kExitConfigError;
    const std::string name = parsed.front()->get_name();
    try {
        gradgeom::Json config = gradgeom::load_config_file(config_path);
        for (const std::string& o : overrides) gradgeom::apply_override(config, o);
        gradgeom::validate_config(config, name);
        if (outdir.empty()) outdir = config.at("output").value("path", "out");
        return gradgeom::run_subcommand(name, config, outdir);
    } catch (const gradgeom::ConfigError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return gradgeom::kExitConfigError;
    }
}
