// qtb — decoherence and decay-asymmetry toy experiments
#include <CLI11.hpp>

#include <iostream>
#include <string>

#include "qtb/selftest.hpp"

int main(int argc, char** argv) {
    CLI::App app{"quantum toy bench: decoherence, effective decay, CP/CPT asymmetries"};
    app.require_subcommand(1);

    qtb::RunOptions opt;
    std::string seed_str, out_str, format_str, eps_str;

    const auto add_common = [&](CLI::App* sub, bool needs_config) {
        CLI::Option* c = sub->add_option("--config", opt.config_path, "JSON config file");
        if (needs_config) c->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed_str, "override the config seed");
        sub->add_option("--out", out_str, "output directory (default from config, else .)");
        sub->add_option("--format", format_str, "csv | csv+plot")
            ->check(CLI::IsMember({"csv", "csv+plot"}));
        sub->add_option("--eps-mode", eps_str, "finite | limit (overrides the config)")
            ->check(CLI::IsMember({"finite", "limit"}));
    };

    CLI::App* decohere = app.add_subcommand("decohere", "dephasing trajectory of one coherence");
    CLI::App* wwa = app.add_subcommand("wwa", "effective decay matrix and survival comparison");
    CLI::App* ensemble = app.add_subcommand("ensemble", "scatter of mass/width splittings");
    CLI::App* symmetry = app.add_subcommand("symmetry", "classify a model's discrete symmetries");
    CLI::App* selftest = app.add_subcommand("selftest", "run the built-in acceptance checks");
    for (CLI::App* sub : {decohere, wwa, ensemble, symmetry}) add_common(sub, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : qtb::exit_config;
    }

    if (selftest->parsed())
        return qtb::print_acceptance_report(qtb::run_acceptance_checks(), std::cout);

    if (!seed_str.empty()) {
        try {
            opt.seed = std::stoull(seed_str);
        } catch (const std::exception&) {
            std::cerr << "config error: --seed must be a nonnegative integer\n";
            return qtb::exit_config;
        }
    }
    if (!out_str.empty()) opt.out_dir = out_str;
    if (!format_str.empty()) opt.format = format_str;
    if (!eps_str.empty()) opt.eps_mode = eps_str;

    const std::string name = app.get_subcommands().front()->get_name();
    return qtb::run_command(name, opt, std::cerr);
}
