#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

namespace abplan::cli {

enum class Format { json, csv, both };

// A batch run: one subcommand, one JSON spec, one output directory.
// Specs are validated strictly (unknown keys are errors) before any
// computation; outputs are written atomically and embed the spec hash, the
// seed and the tool version.
struct RunConfig {
    std::string subcommand;
    std::filesystem::path spec_path;
    std::filesystem::path out_dir = ".";
    std::uint64_t seed = 0;
    bool seed_overridden = false;  // --seed beats the spec's "seed" key
    Format format = Format::both;
    std::string figure_family;  // `figures` subcommand only
};

// Returns the process exit status: 0 success, 2 spec validation error,
// 3 numerical failure.
int run(const RunConfig& config);

}  // namespace abplan::cli
