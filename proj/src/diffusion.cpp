#include "diffnet/diffusion.hpp"

#include <cmath>
#include <sstream>

#include "diffnet/errors.hpp"

namespace diffnet {

NetworkState NetworkState::zeros(int n_nodes, int dim) {
    NetworkState s;
    s.iterates.assign(static_cast<std::size_t>(n_nodes), Eigen::VectorXd::Zero(dim));
    s.intermediates.assign(static_cast<std::size_t>(n_nodes), Eigen::VectorXd::Zero(dim));
    s.iteration = 0;
    return s;
}

void adapt_step(NetworkState& state, const std::vector<double>& steps, const GradientFn& grad,
                std::vector<Rng>& rngs) {
    const std::size_t n = state.iterates.size();
    for (std::size_t k = 0; k < n; ++k) {
        const Eigen::VectorXd g = grad(static_cast<int>(k), state.iterates[k], rngs[k]);
        state.intermediates[k] = state.iterates[k] - steps[k] * g;
    }
}

void combine_step(NetworkState& state, const CombinationMatrix& a, const Topology& t) {
    const int n = t.n_nodes();
    if (a.n_nodes() != n || static_cast<int>(state.intermediates.size()) != n) {
        throw SimulationError("combine_step: dimension mismatch");
    }
    for (int k = 0; k < n; ++k) {
        Eigen::VectorXd& w = state.iterates[static_cast<std::size_t>(k)];
        w.setZero();
        for (int l : t.neighbors(k)) {
            w += a.entries(l, k) * state.intermediates[static_cast<std::size_t>(l)];
        }
    }
}

double network_sd(const NetworkState& state, const Eigen::VectorXd& w_star) {
    double acc = 0.0;
    for (const auto& w : state.iterates) {
        acc += (w_star - w).squaredNorm();
    }
    return acc / static_cast<double>(state.iterates.size());
}

std::vector<std::pair<int, int>> supported_entries(const Topology& t) {
    std::vector<std::pair<int, int>> out;
    for (int k = 0; k < t.n_nodes(); ++k) {
        for (int l : t.neighbors(k)) {
            out.emplace_back(l, k);
        }
    }
    return out;
}

namespace {

// Gathers [psi_l]_{l in N_k} as an M x n_k block.
Eigen::MatrixXd neighborhood_block(const std::vector<Eigen::VectorXd>& psi, const Topology& t,
                                   int k) {
    const auto& nb = t.neighbors(k);
    Eigen::MatrixXd block(psi[0].size(), static_cast<Eigen::Index>(nb.size()));
    for (std::size_t j = 0; j < nb.size(); ++j) {
        block.col(static_cast<Eigen::Index>(j)) = psi[static_cast<std::size_t>(nb[j])];
    }
    return block;
}

}  // namespace

ReplicationResult run_replication(const Topology& t, const std::vector<double>& steps,
                                  const GradientFn& grad, const Eigen::VectorXd& w_star,
                                  const PolicySpec& policy, long n_iters,
                                  std::uint64_t data_seed, const ReplicationOptions& options) {
    const int n = t.n_nodes();
    const int dim = static_cast<int>(w_star.size());
    if (static_cast<int>(steps.size()) != n) {
        throw SimulationError("run_replication: need one step size per node");
    }

    ReplicationResult result;
    result.sd.reserve(static_cast<std::size_t>(n_iters));

    NetworkState state = NetworkState::zeros(n, dim);
    std::vector<Rng> rngs;
    rngs.reserve(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
        rngs.emplace_back(derive_seed(data_seed, {static_cast<std::uint64_t>(k)}));
    }

    std::vector<GramianCombinerState> gramian_states;
    std::vector<DiagonalCombinerState> diag_states;
    if (policy.kind == PolicySpec::Kind::Gramian) {
        for (int k = 0; k < n; ++k) {
            gramian_states.emplace_back(dim, t.degree(k), policy.alpha1, policy.alpha2);
        }
    } else if (policy.kind == PolicySpec::Kind::GramianDiag) {
        for (int k = 0; k < n; ++k) {
            diag_states.emplace_back(dim, policy.alpha1, policy.alpha2);
        }
    } else if (policy.static_matrix.n_nodes() != n) {
        throw SimulationError("run_replication: static policy matrix size mismatch");
    }

    const auto support = options.log_weights ? supported_entries(t)
                                             : std::vector<std::pair<int, int>>{};
    if (options.log_weights) {
        result.weight_trajectory.resize(n_iters, static_cast<Eigen::Index>(support.size()));
    }

    // Full-network Gramian EMA probe (theory validation).
    Eigen::MatrixXd q_full;
    Eigen::MatrixXd psi_bar_full;
    Eigen::MatrixXd q_tail_sum;
    long q_tail_count = 0;
    const long q_tail_start =
        n_iters - static_cast<long>(std::ceil(options.gramian_tail * static_cast<double>(n_iters)));
    if (options.track_full_gramian) {
        q_full = Eigen::MatrixXd::Identity(n, n);
        psi_bar_full = Eigen::MatrixXd::Zero(dim, n);
        q_tail_sum = Eigen::MatrixXd::Zero(n, n);
    }

    // Stationarity probe accumulators.
    Eigen::MatrixXd prev_psi;
    Eigen::MatrixXd cross_sum, psi_sum;
    long probe_count = 0;
    const long probe_start =
        n_iters - static_cast<long>(std::ceil(options.probe_tail * static_cast<double>(n_iters)));
    if (options.probe_stationarity) {
        cross_sum = Eigen::MatrixXd::Zero(n, n);
        psi_sum = Eigen::MatrixXd::Zero(dim, n);
    }

    CombinationMatrix a_current = policy.static_matrix;

    for (long i = 0; i < n_iters; ++i) {
        adapt_step(state, steps, grad, rngs);

        switch (policy.kind) {
            case PolicySpec::Kind::Static:
                combine_step(state, a_current, t);
                break;
            case PolicySpec::Kind::Gramian: {
                a_current = CombinationMatrix(n);
                std::vector<Eigen::VectorXd> new_iterates(static_cast<std::size_t>(n));
                for (int k = 0; k < n; ++k) {
                    const Eigen::MatrixXd block = neighborhood_block(state.intermediates, t, k);
                    auto& st = gramian_states[static_cast<std::size_t>(k)];
                    gramian_update(st, block);
                    KktSolution sol = adaptive_weights_full(st);
                    if (sol.used_fallback) {
                        ++result.kkt_fallbacks;
                    }
                    const auto& nb = t.neighbors(k);
                    for (std::size_t j = 0; j < nb.size(); ++j) {
                        a_current.entries(nb[j], k) = sol.weights(static_cast<Eigen::Index>(j));
                    }
                    new_iterates[static_cast<std::size_t>(k)] = block * sol.weights;
                }
                state.iterates = std::move(new_iterates);
                break;
            }
            case PolicySpec::Kind::GramianDiag: {
                a_current = diagonal_update_and_weights(diag_states, state.intermediates, t);
                combine_step(state, a_current, t);
                break;
            }
        }

        state.iteration = i;
        result.sd.push_back(network_sd(state, w_star));
        result.negative_weights += a_current.count_negative_entries();

        if (options.log_weights) {
            for (std::size_t j = 0; j < support.size(); ++j) {
                result.weight_trajectory(i, static_cast<Eigen::Index>(j)) =
                    a_current.entries(support[j].first, support[j].second);
            }
        }

        if (options.track_full_gramian) {
            Eigen::MatrixXd psi_mat(dim, n);
            for (int k = 0; k < n; ++k) {
                psi_mat.col(k) = state.intermediates[static_cast<std::size_t>(k)];
            }
            const Eigen::MatrixXd centered = psi_mat - psi_bar_full;
            q_full = (1.0 - policy.alpha1) * q_full + policy.alpha1 * centered.transpose() * centered;
            psi_bar_full = (1.0 - policy.alpha2) * psi_bar_full + policy.alpha2 * psi_mat;
            if (i >= q_tail_start) {
                q_tail_sum += q_full;
                ++q_tail_count;
            }
        }

        if (options.probe_stationarity) {
            Eigen::MatrixXd psi_mat(dim, n);
            for (int k = 0; k < n; ++k) {
                psi_mat.col(k) = state.intermediates[static_cast<std::size_t>(k)];
            }
            if (i >= probe_start && prev_psi.size() > 0) {
                cross_sum += psi_mat.transpose() * prev_psi;
                psi_sum += psi_mat;
                ++probe_count;
            }
            prev_psi = std::move(psi_mat);
        }
    }

    if (options.track_full_gramian && q_tail_count > 0) {
        result.gramian_tail_mean = q_tail_sum / static_cast<double>(q_tail_count);
    }
    if (options.probe_stationarity && probe_count > 0) {
        const Eigen::MatrixXd cross_mean = cross_sum / static_cast<double>(probe_count);
        const Eigen::MatrixXd psi_mean = psi_sum / static_cast<double>(probe_count);
        const Eigen::MatrixXd stationary = psi_mean.transpose() * psi_mean;
        const double denom = stationary.norm();
        result.psi_decorrelation =
            denom > 0.0 ? (cross_mean - stationary).norm() / denom : 0.0;
    }
    return result;
}

}  // namespace diffnet
