#include <CLI11.hpp>
#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include "diffnet/config.hpp"
#include "diffnet/errors.hpp"
#include "diffnet/harness.hpp"
#include "diffnet/output.hpp"

namespace {

enum ExitCode { kOk = 0, kConfig = 2, kCalibration = 3, kRuntime = 4, kIo = 5 };

void print_policy_matrix(const std::string& name, const diffnet::CombinationMatrix& a) {
    std::printf("%s:\n", name.c_str());
    for (Eigen::Index l = 0; l < a.entries.rows(); ++l) {
        for (Eigen::Index k = 0; k < a.entries.cols(); ++k) {
            std::printf("%s%9.6f", k == 0 ? "  " : " ", a.entries(l, k));
        }
        std::printf("\n");
    }
}

int run_simulate(const std::string& config_path, const std::optional<long>& runs,
                 const std::optional<std::uint64_t>& seed,
                 const std::optional<std::string>& out_dir) {
    diffnet::ExperimentConfig cfg = diffnet::parse_config(config_path);
    if (runs) cfg.n_runs = *runs;
    if (seed) cfg.master_seed = *seed;
    if (out_dir) cfg.out_dir = *out_dir;
    cfg.validate();

    const diffnet::RunResult result = diffnet::run_experiment(cfg);
    const diffnet::OutputPaths paths = diffnet::emit_results(result, cfg);

    std::printf("theory MSD: %.2f dB\n", result.setup.prediction.msd_av_db);
    for (const diffnet::PolicyResult& pr : result.policies) {
        std::printf("%-18s steady state %.2f dB (gap %+.2f dB)\n", pr.name.c_str(),
                    pr.steady_state_db, pr.steady_state_db - result.setup.prediction.msd_av_db);
    }
    std::printf("wrote %s\n", paths.curves_csv.c_str());
    if (!paths.weights_csv.empty()) std::printf("wrote %s\n", paths.weights_csv.c_str());
    std::printf("wrote %s\nwrote %s\n", paths.summary_json.c_str(), paths.manifest_json.c_str());
    return kOk;
}

int run_theory(const std::string& config_path) {
    const diffnet::ExperimentConfig cfg = diffnet::parse_config(config_path);
    const diffnet::NetworkSetup setup = diffnet::prepare_network(cfg);
    std::cout << diffnet::prediction_json(setup.prediction).dump(2) << '\n';
    return kOk;
}

int run_policy_table(const std::string& config_path) {
    const diffnet::ExperimentConfig cfg = diffnet::parse_config(config_path);
    const diffnet::NetworkSetup setup = diffnet::prepare_network(cfg);
    const diffnet::Topology& t = setup.topology;
    print_policy_matrix("uniform", diffnet::static_policy(diffnet::StaticRule::Uniform, t));
    print_policy_matrix("metropolis", diffnet::static_policy(diffnet::StaticRule::Metropolis, t));
    print_policy_matrix("max-degree", diffnet::static_policy(diffnet::StaticRule::MaxDegree, t));
    print_policy_matrix("relative-variance",
                        diffnet::static_policy(diffnet::StaticRule::RelativeVariance, t,
                                               setup.prediction.theta));
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Diffusion network simulator: adaptive and static combination policies"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<long> runs;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;

    CLI::App* simulate = app.add_subcommand("simulate", "Run the Monte Carlo experiment");
    simulate->add_option("--config", config_path, "Experiment config file")->required();
    simulate->add_option("--runs", runs, "Override the number of replications");
    simulate->add_option("--seed", seed, "Override the master seed");
    simulate->add_option("--out", out_dir, "Override the output directory");

    CLI::App* theory = app.add_subcommand("theory", "Print the steady-state prediction as JSON");
    theory->add_option("--config", config_path, "Experiment config file")->required();

    CLI::App* table =
        app.add_subcommand("policy-table", "Print the static combination matrices");
    table->add_option("--config", config_path, "Experiment config file")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfig;
    }

    try {
        if (simulate->parsed()) return run_simulate(config_path, runs, seed, out_dir);
        if (theory->parsed()) return run_theory(config_path);
        return run_policy_table(config_path);
    } catch (const diffnet::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return kConfig;
    } catch (const diffnet::CalibrationError& e) {
        std::fprintf(stderr, "calibration error: %s\n", e.what());
        return kCalibration;
    } catch (const diffnet::IoError& e) {
        std::fprintf(stderr, "io error: %s\n", e.what());
        return kIo;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kRuntime;
    }
}
