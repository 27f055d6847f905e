#include "diffnet/output.hpp"

#include <Eigen/Core>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "diffnet/errors.hpp"

namespace diffnet {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_float(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

namespace {

std::ofstream open_for_write(const std::string& path) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path);
    return out;
}

void finish_write(std::ofstream& out, const std::string& path) {
    out.flush();
    if (!out) throw IoError("write failed: " + path);
}

json vector_json(const std::vector<double>& v) { return json(v); }

json eigen_vector_json(const Eigen::VectorXd& v) {
    json arr = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

void write_curves_csv(const RunResult& result, const std::string& path) {
    std::ofstream out = open_for_write(path);
    out << "iteration,policy,sd_linear,sd_db\n";
    for (const PolicyResult& pr : result.policies) {
        for (std::size_t i = 0; i < pr.sd_linear.size(); ++i) {
            out << i << ',' << pr.name << ',' << format_float(pr.sd_linear[i]) << ','
                << format_float(pr.sd_db[i]) << '\n';
        }
    }
    finish_write(out, path);
}

void write_weights_csv(const RunResult& result, const std::string& path) {
    const std::vector<std::pair<int, int>> entries = supported_entries(result.setup.topology);
    std::ofstream out = open_for_write(path);
    out << "iteration,policy,k,l,weight\n";
    for (const PolicyResult& pr : result.policies) {
        if (pr.weight_trajectory.size() == 0) continue;
        for (Eigen::Index i = 0; i < pr.weight_trajectory.rows(); ++i) {
            for (std::size_t j = 0; j < entries.size(); ++j) {
                const auto [l, k] = entries[j];
                out << i << ',' << pr.name << ',' << k << ',' << l << ','
                    << format_float(pr.weight_trajectory(i, static_cast<Eigen::Index>(j)))
                    << '\n';
            }
        }
    }
    finish_write(out, path);
}

}  // namespace

json prediction_json(const SteadyStatePrediction& prediction) {
    json out;
    out["q_inf_diag"] = vector_json(prediction.q_inf_diag);
    out["perron"] = vector_json(prediction.perron);
    out["msd_av"] = prediction.msd_av;
    out["msd_av_db"] = prediction.msd_av_db;
    return out;
}

json summary_json(const RunResult& result) {
    json out;
    out["iterations"] = result.n_iters;
    out["runs"] = result.n_runs;
    out["seed"] = result.master_seed;
    out["tail_window"] = result.tail_window;
    out["theory"] = {
        {"msd_av", result.setup.prediction.msd_av},
        {"msd_av_db", result.setup.prediction.msd_av_db},
        {"q_inf_diag", vector_json(result.setup.prediction.q_inf_diag)},
        {"perron", vector_json(result.setup.prediction.perron)},
        {"theta", vector_json(result.setup.prediction.theta)},
    };
    json policies = json::array();
    for (const PolicyResult& pr : result.policies) {
        json p;
        p["name"] = pr.name;
        p["steady_state"] = pr.steady_state;
        p["steady_state_db"] = pr.steady_state_db;
        p["theory_gap_db"] = pr.steady_state_db - result.setup.prediction.msd_av_db;
        p["negative_weights"] = pr.negative_weights;
        p["kkt_fallbacks"] = pr.kkt_fallbacks;
        if (!std::isnan(pr.weight_deviation)) p["weight_deviation"] = pr.weight_deviation;
        if (!std::isnan(pr.weight_drift)) p["weight_drift"] = pr.weight_drift;
        if (!std::isnan(pr.psi_decorrelation)) p["psi_decorrelation"] = pr.psi_decorrelation;
        policies.push_back(std::move(p));
    }
    out["policies"] = std::move(policies);
    return out;
}

json manifest_json(const RunResult& result, const ExperimentConfig& cfg) {
    json config;
    config["experiment"] = {
        {"iterations", cfg.n_iters},         {"runs", cfg.n_runs},
        {"seed", cfg.master_seed},           {"tail_window", cfg.tail_window},
        {"log_weights", cfg.log_weights},    {"probe_stationarity", cfg.probe_stationarity},
        {"threads", cfg.n_threads},
    };
    const char* model_name = cfg.topology.model == GraphModel::Ring       ? "ring"
                             : cfg.topology.model == GraphModel::Complete ? "complete"
                                                                          : "random";
    config["topology"] = {
        {"type", model_name},
        {"nodes", cfg.topology.n_nodes},
        {"edge_prob", cfg.topology.edge_prob},
        {"explicit_adjacency", !cfg.topology.adjacency_lines.empty()},
    };
    config["model"] = {
        {"dim", cfg.model.dim},
        {"step", cfg.model.step},
        {"target_reg", cfg.model.target_reg},
        {"mean_scale_min", cfg.model.mean_scale_min},
        {"mean_scale_max", cfg.model.mean_scale_max},
        {"var_min", cfg.model.var_min},
        {"var_max", cfg.model.var_max},
        {"calibration_tol", cfg.model.calibration_tol},
        {"statistics_samples", cfg.model.statistics_samples},
    };
    json policies = json::array();
    for (const PolicyConfig& pc : cfg.policies) {
        policies.push_back({{"name", pc.name}, {"alpha1", pc.alpha1}, {"alpha2", pc.alpha2}});
    }
    config["policies"] = std::move(policies);
    config["output"] = {{"directory", cfg.out_dir}};

    json nodes = json::array();
    for (std::size_t k = 0; k < result.setup.models.size(); ++k) {
        const LogisticNodeModel& m = result.setup.models[k];
        nodes.push_back({{"node", k},
                         {"mean_scale", m.mean_scale},
                         {"var", m.var},
                         {"reg", m.reg},
                         {"step", m.step},
                         {"noise_power", result.setup.stats[k].noise_power}});
    }

    json out;
    out["config"] = std::move(config);
    out["adjacency"] = to_adjacency_text(result.setup.topology);
    out["nodes"] = std::move(nodes);
    out["calibration"] = {
        {"w_star", eigen_vector_json(result.setup.truth.w_star)},
        {"grad_residuals", vector_json(result.setup.truth.grad_residuals)},
    };
    out["versions"] = {
        {"compiler", __VERSION__},
        {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                      "." + std::to_string(EIGEN_MINOR_VERSION)},
        {"json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                     std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                     std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
    };
    return out;
}

OutputPaths emit_results(const RunResult& result, const ExperimentConfig& cfg) {
    if (result.policies.empty()) {
        throw ConfigError("emit_results: no policies to write");
    }

    OutputPaths paths;
    paths.directory = cfg.out_dir;
    std::error_code ec;
    fs::create_directories(paths.directory, ec);
    if (ec) throw IoError("cannot create output directory " + paths.directory + ": " + ec.message());

    paths.curves_csv = (fs::path(paths.directory) / "curves.csv").string();
    paths.summary_json = (fs::path(paths.directory) / "summary.json").string();
    paths.manifest_json = (fs::path(paths.directory) / "manifest.json").string();

    write_curves_csv(result, paths.curves_csv);

    bool any_weights = false;
    for (const PolicyResult& pr : result.policies) {
        if (pr.weight_trajectory.size() != 0) any_weights = true;
    }
    if (any_weights) {
        paths.weights_csv = (fs::path(paths.directory) / "weights.csv").string();
        write_weights_csv(result, paths.weights_csv);
    }

    {
        std::ofstream out = open_for_write(paths.summary_json);
        out << summary_json(result).dump(2) << '\n';
        finish_write(out, paths.summary_json);
    }
    {
        std::ofstream out = open_for_write(paths.manifest_json);
        out << manifest_json(result, cfg).dump(2) << '\n';
        finish_write(out, paths.manifest_json);
    }
    return paths;
}

}  // namespace diffnet
