#include "diffnet/harness.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <set>
#include <sstream>
#include <thread>

#include "diffnet/errors.hpp"

namespace diffnet {

namespace {

bool adaptive_policy_name(const std::string& name) {
    return name == "gramian" || name == "gramian-diag";
}

PolicySpec policy_spec_for(const PolicyConfig& pc, const Topology& t,
                           const std::vector<double>& theta) {
    PolicySpec spec;
    spec.alpha1 = pc.alpha1;
    spec.alpha2 = pc.alpha2;
    if (pc.name == "gramian") {
        spec.kind = PolicySpec::Kind::Gramian;
    } else if (pc.name == "gramian-diag") {
        spec.kind = PolicySpec::Kind::GramianDiag;
    } else {
        spec.kind = PolicySpec::Kind::Static;
        spec.static_matrix = static_policy(static_rule_from_name(pc.name), t, theta);
    }
    return spec;
}

}  // namespace

void ExperimentConfig::validate() const {
    if (topology.n_nodes < 1) throw ConfigError("topology.nodes: must be >= 1");
    if (!(topology.edge_prob > 0.0 && topology.edge_prob <= 1.0)) {
        throw ConfigError("topology.edge_prob: must be in (0, 1]");
    }
    if (model.dim < 1) throw ConfigError("model.dim: must involve at least one coordinate");
    if (!(model.step > 0.0)) throw ConfigError("model.step: must be positive");
    if (!(model.target_reg > 0.0)) throw ConfigError("model.target_reg: must be positive");
    if (!(model.mean_scale_min > 0.0 && model.mean_scale_min <= model.mean_scale_max)) {
        throw ConfigError("model.mean_scale range: need 0 < min <= max");
    }
    if (!(model.var_min > 0.0 && model.var_min <= model.var_max)) {
        throw ConfigError("model.var range: need 0 < min <= max");
    }
    if (!(model.calibration_tol > 0.0)) throw ConfigError("model.calibration_tol: must be positive");
    if (model.statistics_samples < 1000) {
        throw ConfigError("model.statistics_samples: must be >= 1000");
    }
    if (model.calibration_samples < 1000) {
        throw ConfigError("model.calibration_samples: must be >= 1000");
    }
    if (model.verification_samples < 1000) {
        throw ConfigError("model.verification_samples: must be >= 1000");
    }
    if (n_iters < 1) throw ConfigError("iterations: must be >= 1");
    if (n_runs < 1) throw ConfigError("runs: must be >= 1");
    if (!(tail_window > 0.0 && tail_window <= 1.0)) {
        throw ConfigError("tail_window: must be in (0, 1]");
    }
    if (n_threads < 0) throw ConfigError("threads: must be >= 0");
    if (policies.empty()) throw ConfigError("policies: at least one is required");

    std::set<std::string> seen;
    for (const PolicyConfig& pc : policies) {
        if (!seen.insert(pc.name).second) {
            throw ConfigError("policies: duplicate entry '" + pc.name + "'");
        }
        if (!adaptive_policy_name(pc.name)) {
            static_rule_from_name(pc.name);  // throws on unknown names
        }
        if (!(pc.alpha1 > 0.0 && pc.alpha1 <= 1.0) || !(pc.alpha2 > 0.0 && pc.alpha2 <= 1.0)) {
            throw ConfigError("policy '" + pc.name + "': alpha1, alpha2 must be in (0, 1]");
        }
    }
}

NetworkSetup prepare_network(const ExperimentConfig& cfg) {
    cfg.validate();

    Topology t = cfg.topology.adjacency_lines.empty()
                     ? generate_topology(cfg.topology.n_nodes, cfg.topology.model,
                                         cfg.master_seed, cfg.topology.edge_prob)
                     : topology_from_adjacency_text(cfg.topology.n_nodes,
                                                    cfg.topology.adjacency_lines);
    const int n = t.n_nodes();

    // Per-node data parameters come from a dedicated substream so the
    // same statistics are shared by every run and policy.
    Rng param_rng(derive_seed(cfg.master_seed, Stream::NodeParams));
    std::vector<LogisticNodeModel> models(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        LogisticNodeModel& m = models[static_cast<std::size_t>(k)];
        m.dim = cfg.model.dim;
        m.mean_scale = param_rng.uniform(cfg.model.mean_scale_min, cfg.model.mean_scale_max);
        m.var = param_rng.log_uniform(cfg.model.var_min, cfg.model.var_max);
        m.reg = cfg.model.target_reg;  // calibration overwrites this
        m.step = cfg.model.step;
    }

    CalibrationOptions cal_opts;
    cal_opts.calibration_samples = cfg.model.calibration_samples;
    cal_opts.verify_samples = cfg.model.verification_samples;
    GroundTruth truth = calibrate_common_minimizer(models, cfg.model.target_reg,
                                                   cfg.model.calibration_tol, cfg.master_seed,
                                                   cal_opts);

    std::vector<NodeStatistics> stats(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        stats[static_cast<std::size_t>(k)] =
            estimate_node_statistics(models[static_cast<std::size_t>(k)], truth.w_star,
                                     cfg.model.statistics_samples,
                                     derive_seed(cfg.master_seed, Stream::Statistics,
                                                 static_cast<std::uint64_t>(k)));
    }

    std::vector<double> steps(static_cast<std::size_t>(n), cfg.model.step);
    SteadyStatePrediction prediction = predict_steady_state(t, steps, stats);

    return NetworkSetup{std::move(t),     std::move(models), std::move(truth),
                        std::move(stats), std::move(steps),  std::move(prediction)};
}

GradientFn logistic_gradient_fn(const std::vector<LogisticNodeModel>& models) {
    return [&models](int node, const Eigen::VectorXd& w, Rng& rng) {
        const LogisticNodeModel& m = models[static_cast<std::size_t>(node)];
        return stochastic_gradient(m, w, sample_datum(m, rng));
    };
}

double to_db(double linear) {
    if (!(linear > 0.0)) return kDbFloor;
    return std::max(kDbFloor, 10.0 * std::log10(linear));
}

double steady_state_estimate(const std::vector<double>& curve, double window) {
    if (curve.empty()) throw ConfigError("steady_state_estimate: empty curve");
    if (!(window > 0.0 && window <= 1.0)) {
        throw ConfigError("steady_state_estimate: window must be in (0, 1]");
    }
    const std::size_t n = curve.size();
    const std::size_t take = std::min(
        n, static_cast<std::size_t>(std::ceil(window * static_cast<double>(n))));
    double sum = 0.0;
    for (std::size_t i = n - take; i < n; ++i) sum += curve[i];
    return sum / static_cast<double>(take);
}

double weight_convergence_report(const Eigen::MatrixXd& trajectory, const Topology& t,
                                 const CombinationMatrix& a_inf, double tail_window) {
    if (trajectory.rows() == 0) {
        throw ConfigError("weight_convergence_report: empty trajectory");
    }
    if (!(tail_window > 0.0 && tail_window <= 1.0)) {
        throw ConfigError("weight_convergence_report: tail_window must be in (0, 1]");
    }
    const std::vector<std::pair<int, int>> entries = supported_entries(t);
    if (trajectory.cols() != static_cast<Eigen::Index>(entries.size())) {
        throw ConfigError("weight_convergence_report: trajectory does not match topology");
    }
    const Eigen::Index rows = trajectory.rows();
    const Eigen::Index take = std::min<Eigen::Index>(
        rows, static_cast<Eigen::Index>(std::ceil(tail_window * static_cast<double>(rows))));
    const Eigen::RowVectorXd avg = trajectory.bottomRows(take).colwise().mean();

    double dev = 0.0;
    for (std::size_t j = 0; j < entries.size(); ++j) {
        const auto [l, k] = entries[j];
        dev = std::max(dev, std::abs(avg(static_cast<Eigen::Index>(j)) - a_inf.entries(l, k)));
    }
    return dev;
}

namespace {

// Assumption probe: drift of the logged mean weights between the two
// halves of the tail window (steady weights make this small).
double weight_drift_report(const Eigen::MatrixXd& trajectory, double tail_window) {
    const Eigen::Index rows = trajectory.rows();
    const Eigen::Index take = std::min<Eigen::Index>(
        rows, static_cast<Eigen::Index>(std::ceil(tail_window * static_cast<double>(rows))));
    if (take < 2) return 0.0;
    const Eigen::Index half = take / 2;
    const Eigen::MatrixXd tail = trajectory.bottomRows(take);
    const Eigen::RowVectorXd first = tail.topRows(half).colwise().mean();
    const Eigen::RowVectorXd second = tail.bottomRows(take - half).colwise().mean();
    return (second - first).cwiseAbs().maxCoeff();
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg) {
    RunResult out{prepare_network(cfg)};
    out.master_seed = cfg.master_seed;
    out.n_iters = cfg.n_iters;
    out.n_runs = cfg.n_runs;
    out.tail_window = cfg.tail_window;
    const GradientFn grad = logistic_gradient_fn(out.setup.models);

    std::vector<std::uint64_t> data_seeds(static_cast<std::size_t>(cfg.n_runs));
    for (long r = 0; r < cfg.n_runs; ++r) {
        // One data stream per replication, reused verbatim by every
        // policy: paired comparisons.
        data_seeds[static_cast<std::size_t>(r)] =
            derive_seed(cfg.master_seed, Stream::ReplicationData, static_cast<std::uint64_t>(r));
    }

    ReplicationOptions options;
    options.log_weights = cfg.log_weights;
    options.probe_stationarity = cfg.probe_stationarity;
    options.probe_tail = cfg.tail_window;

    const unsigned hw = std::thread::hardware_concurrency();
    long threads = cfg.n_threads > 0 ? cfg.n_threads : static_cast<long>(hw ? hw : 1);
    threads = std::max<long>(1, std::min<long>(threads, cfg.n_runs));

    for (const PolicyConfig& pc : cfg.policies) {
        const PolicySpec spec = policy_spec_for(pc, out.setup.topology, out.setup.prediction.theta);

        PolicyResult pr;
        pr.name = pc.name;
        std::vector<double> sd_sum(static_cast<std::size_t>(cfg.n_iters), 0.0);
        Eigen::MatrixXd weight_sum;
        double probe_sum = 0.0;

        // Replications run in blocks of `threads`; the reduction walks
        // blocks in replication order, so the result does not depend on
        // scheduling or thread count.
        for (long base = 0; base < cfg.n_runs; base += threads) {
            const long count = std::min(threads, cfg.n_runs - base);
            std::vector<std::future<ReplicationResult>> block;
            block.reserve(static_cast<std::size_t>(count));
            for (long j = 0; j < count; ++j) {
                const std::uint64_t seed = data_seeds[static_cast<std::size_t>(base + j)];
                block.push_back(std::async(std::launch::async, [&, seed] {
                    return run_replication(out.setup.topology, out.setup.steps, grad,
                                           out.setup.truth.w_star, spec, cfg.n_iters, seed,
                                           options);
                }));
            }
            for (long j = 0; j < count; ++j) {
                ReplicationResult rep;
                try {
                    rep = block[static_cast<std::size_t>(j)].get();
                } catch (const std::exception& e) {
                    std::ostringstream os;
                    os << "policy '" << pc.name << "', replication " << (base + j) << ": "
                       << e.what();
                    throw SimulationError(os.str());
                }
                for (long i = 0; i < cfg.n_iters; ++i) {
                    sd_sum[static_cast<std::size_t>(i)] += rep.sd[static_cast<std::size_t>(i)];
                }
                pr.negative_weights += rep.negative_weights;
                pr.kkt_fallbacks += rep.kkt_fallbacks;
                if (options.log_weights) {
                    if (weight_sum.size() == 0) {
                        weight_sum = Eigen::MatrixXd::Zero(rep.weight_trajectory.rows(),
                                                           rep.weight_trajectory.cols());
                    }
                    weight_sum += rep.weight_trajectory;
                }
                if (options.probe_stationarity) probe_sum += rep.psi_decorrelation;
            }
        }

        const double inv_runs = 1.0 / static_cast<double>(cfg.n_runs);
        pr.sd_linear.resize(static_cast<std::size_t>(cfg.n_iters));
        pr.sd_db.resize(static_cast<std::size_t>(cfg.n_iters));
        for (long i = 0; i < cfg.n_iters; ++i) {
            const double v = sd_sum[static_cast<std::size_t>(i)] * inv_runs;
            pr.sd_linear[static_cast<std::size_t>(i)] = v;
            pr.sd_db[static_cast<std::size_t>(i)] = to_db(v);
        }
        pr.steady_state = steady_state_estimate(pr.sd_linear, cfg.tail_window);
        pr.steady_state_db = to_db(pr.steady_state);

        if (options.log_weights) {
            pr.weight_trajectory = weight_sum * inv_runs;
            pr.weight_deviation = weight_convergence_report(
                pr.weight_trajectory, out.setup.topology, out.setup.prediction.a_inf,
                cfg.tail_window);
            pr.weight_drift = weight_drift_report(pr.weight_trajectory, cfg.tail_window);
        }
        if (options.probe_stationarity) pr.psi_decorrelation = probe_sum * inv_runs;

        out.policies.push_back(std::move(pr));
    }
    return out;
}

}  // namespace diffnet
