#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "shb/harness.hpp"

using namespace shb;

int main(int argc, char** argv) {
    CLI::App app{"Stochastic heavy ball laboratory"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(SHB_VERSION));

    std::string config_path, out_dir;
    std::vector<std::string> overrides;
    std::string catalog_name;

    for (const char* kind : {"run", "sweep", "avoidance", "di", "check"}) {
        auto* sub = app.add_subcommand(kind);
        sub->add_option("-c,--config", config_path, "JSON config file")->check(CLI::ExistingFile);
        sub->add_option("-s,--set", overrides, "Override a config key, e.g. --set schedule.gamma=0.8")
            ->take_all();
        sub->add_option("-o,--out", out_dir, "Output directory");
    }
    auto* cat = app.add_subcommand("catalog", "Print a catalog problem as JSON, or list the catalog");
    cat->add_option("name", catalog_name);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(ExitCode::validation);
    }

    std::string command_line;
    for (int i = 0; i < argc; ++i) command_line += (i ? " " : "") + std::string(argv[i]);

    try {
        if (cat->parsed()) {
            if (catalog_name.empty()) {
                for (const auto& n : catalog::names()) std::cout << n << '\n';
            } else {
                std::cout << problem_to_json(catalog::by_name(catalog_name)).dump(2) << '\n';
            }
            return 0;
        }
        const std::string kind = app.get_subcommands().front()->get_name();
        json doc = config_path.empty() ? json::object() : read_json_file(config_path);
        doc["kind"] = kind;
        for (const auto& o : overrides) apply_override(doc, o);
        if (!out_dir.empty()) doc["out"] = out_dir;
        const ExperimentConfig cfg = parse_config(doc);
        return static_cast<int>(run_experiment(cfg, command_line, std::cout));
    } catch (const ValidationError& e) {
        std::cerr << "validation error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::validation);
    } catch (const InputError& e) {
        std::cerr << "input error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::validation);
    } catch (const DivergenceError& e) {
        std::cerr << "divergence: " << e.what() << '\n';
        return static_cast<int>(ExitCode::divergence);
    } catch (const CapabilityError& e) {
        std::cerr << "capability error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::capability);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return static_cast<int>(ExitCode::failure);
    }
}
