// predict <command> --config <path> [--out <path>] [--seed N] [--samples N] [--shards N]
#include <fstream>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "invpred/experiments.hpp"

using namespace invpred;

int main(int argc, char** argv) {
    CLI::App app{"Predictive risk experiments for invariant predictive procedures"};
    std::string commandName;
    std::string configPath;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed, samples;
    std::optional<unsigned> shards;
    app.add_option("command", commandName, "mvn-risk, gp-risk, gp-improvement, mvn-grid or check-invariance")
        ->required()
        ->check(CLI::IsMember({"mvn-risk", "gp-risk", "gp-improvement", "mvn-grid", "check-invariance"}));
    app.add_option("--config", configPath, "key = value config file")->required();
    app.add_option("--out", out, "output path prefix (writes <prefix>.csv and <prefix>.json)");
    app.add_option("--seed", seed, "overrides `seed`");
    app.add_option("--samples", samples, "overrides `samples`");
    app.add_option("--shards", shards, "overrides `shards`")->check(CLI::PositiveNumber);
    CLI11_PARSE(app, argc, argv);

    const Command command = *parse_command(commandName);
    RunConfig config;
    try {
        config = load_run_config(configPath, command);
    } catch (const Error& e) {
        std::cerr << "error: " << to_string(e.kind()) << ": " << e.what() << '\n';
        if (out) {
            std::ofstream(*out + ".json") << error_record_json(e, commandName);
        }
        return 2;
    }
    if (out) config.outPath = *out;
    if (seed) config.seed = *seed;
    if (samples) config.nSamples = *samples;
    if (shards) config.shards = *shards;
    return run_reporting_errors(config, std::cout, std::cerr);
}
