// abplan: batch planner for portfolios of A/B tests.
//
// Every subcommand reads a JSON spec, writes JSON/CSV artifacts into the
// output directory, and exits 0 on success, 2 on a spec error, 3 on a
// numerical failure.

#include <cstdlib>
#include <string>

#include <CLI11.hpp>

#include "abplan/cli.hpp"
#include "abplan/version.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Return-maximizing design of A/B test portfolios"};
    app.set_version_flag("--version", std::string("abplan ") + abplan::kVersion);
    app.require_subcommand(1);

    abplan::cli::RunConfig config;
    const char* env_out = std::getenv("ABPLAN_OUT_DIR");
    if (env_out != nullptr && *env_out != '\0') config.out_dir = env_out;

    std::string format = "both";
    bool seed_given = false;
    std::uint64_t seed = 0;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("spec", config.spec_path, "JSON spec file")
            ->required()
            ->check(CLI::ExistingFile);
        sub->add_option("-o,--out", config.out_dir,
                        "output directory (default: $ABPLAN_OUT_DIR or .)");
        sub->add_option("--format", format, "output format: json, csv or both")
            ->check(CLI::IsMember({"json", "csv", "both"}));
        sub->add_option("--seed", seed, "override the spec's seed")
            ->each([&](const std::string&) { seed_given = true; });
    };

    static const char* kSubcommands[] = {
        "fit-prior",     "production-curve", "allocate", "thresholds",
        "cost-analysis", "multi-program",    "share-ideas", "sequential",
        "exclusive",     "minimax"};
    for (const char* name : kSubcommands) {
        add_common(app.add_subcommand(name));
    }
    CLI::App* figures = app.add_subcommand("figures", "emit plot-ready CSV bundles");
    add_common(figures);
    figures
        ->add_option("--family", config.figure_family,
                     "one of: value-of-testing, test-passing, p005-comparison, "
                     "metaproduction-heatmap, cost-thresholds, "
                     "program-metaproduction, sequential-schedule, exclusive-curve")
        ->required();

    CLI11_PARSE(app, argc, argv);

    config.subcommand = app.get_subcommands().front()->get_name();
    config.seed = seed;
    config.seed_overridden = seed_given;
    config.format = format == "json"  ? abplan::cli::Format::json
                    : format == "csv" ? abplan::cli::Format::csv
                                      : abplan::cli::Format::both;
    return abplan::cli::run(config);
}
