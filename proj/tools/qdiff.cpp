// qdiff: run, list and validate experiment configurations.
// Exit codes: 0 success, 2 invalid input, 3 numerical non-convergence, 1 anything else.
// Worker count is read from QDIFF_WORKERS only.

#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "qdiff/errors.hpp"
#include "qdiff/harness/config.hpp"
#include "qdiff/harness/runner.hpp"
#include "qdiff/harness/table.hpp"
#include "qdiff/parallel.hpp"

namespace {

constexpr int kValidation = 2;
constexpr int kNumerical = 3;

int cmd_list() {
    for (const auto& e : qdiff::harness::experiment_registry()) std::printf("%-14s %s\n", e.name.c_str(), e.description.c_str());
    return 0;
}

int cmd_validate(const std::string& path) {
    const auto cfg = qdiff::harness::load_config(path);
    std::printf("%s: ok (experiment %s, config hash %s)\n", path.c_str(), cfg.name.c_str(),
                qdiff::harness::config_hash(cfg).c_str());
    return 0;
}

int cmd_run(const std::string& path) {
    const auto cfg = qdiff::harness::load_config(path);
    std::fprintf(stderr, "running %s with %d worker(s) into %s\n", cfg.name.c_str(), qdiff::worker_count(),
                 cfg.output_dir.c_str());
    const auto m = qdiff::harness::run_experiment(cfg);
    for (const auto& t : m.timings) std::fprintf(stderr, "  %-16s %.3f s\n", t.stage.c_str(), t.seconds);
    const auto summary = qdiff::harness::read_csv(std::filesystem::path(cfg.output_dir) / "summary.csv");
    for (const auto& row : summary.rows)
        if (row.size() >= 2) std::printf("%s = %s\n", row[0].c_str(), row[1].c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Disordered-lattice quantum diffusion experiments"};
    app.require_subcommand(1);
    std::string path;
    auto* run = app.add_subcommand("run", "run the experiment described by a config file");
    run->add_option("config", path, "config file")->required();
    app.add_subcommand("list", "list registered experiments");
    auto* validate = app.add_subcommand("validate", "check a config file without running it");
    validate->add_option("config", path, "config file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kValidation;
    }

    try {
        if (run->parsed()) return cmd_run(path);
        if (validate->parsed()) return cmd_validate(path);
        return cmd_list();
    } catch (const qdiff::harness::ConfigError& e) {
        std::cerr << path << ": " << e.what() << '\n';
        return kValidation;
    } catch (const qdiff::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const qdiff::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
