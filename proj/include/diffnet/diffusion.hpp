#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "diffnet/combiners.hpp"
#include "diffnet/rng.hpp"
#include "diffnet/topology.hpp"

namespace diffnet {

// Iterates and intermediates of one replication.
struct NetworkState {
    std::vector<Eigen::VectorXd> iterates;       // w_k
    std::vector<Eigen::VectorXd> intermediates;  // psi_k
    long iteration = 0;

    static NetworkState zeros(int n_nodes, int dim);
};

// Per-node stochastic gradient oracle. One call per node per iteration;
// the engine never reuses data across iterations.
using GradientFn =
    std::function<Eigen::VectorXd(int node, const Eigen::VectorXd& w, Rng& rng)>;

// psi_k = w_k - mu_k * grad_k(w_k); one fresh draw per node.
void adapt_step(NetworkState& state, const std::vector<double>& steps, const GradientFn& grad,
                std::vector<Rng>& rngs);

// w_k = sum_{l in N_k} a_lk psi_l, touching only supported entries.
void combine_step(NetworkState& state, const CombinationMatrix& a, const Topology& t);

// (1/N) sum_k ||w_star - w_k||^2.
double network_sd(const NetworkState& state, const Eigen::VectorXd& w_star);

struct PolicySpec {
    enum class Kind { Static, Gramian, GramianDiag };
    Kind kind = Kind::Static;
    CombinationMatrix static_matrix;  // Kind::Static only
    double alpha1 = 0.01;
    double alpha2 = 0.03;
};

struct ReplicationOptions {
    // Accumulate per-iteration combination matrices (adaptive and
    // static alike) for weight-trajectory reporting.
    bool log_weights = false;
    // Maintain the full N x N Gramian EMA alongside the run and
    // time-average it over the final fraction given below.
    bool track_full_gramian = false;
    double gramian_tail = 0.25;
    // Record tail-window statistics of psi for the stationarity probes.
    bool probe_stationarity = false;
    double probe_tail = 0.10;
};

struct ReplicationResult {
    std::vector<double> sd;  // SD(i), i = 0..n_iters-1
    long negative_weights = 0;
    long kkt_fallbacks = 0;

    // log_weights: per-iteration combination matrices, flattened over
    // the topology's supported (l, k) pairs in column-major (k, then l
    // ascending) order; one row per iteration.
    Eigen::MatrixXd weight_trajectory;

    // track_full_gramian: tail-window time average of the N x N EMA.
    Eigen::MatrixXd gramian_tail_mean;

    // probe_stationarity: lag-1 cross-correlation excess of psi in the
    // tail window, || avg(Psi_i^T Psi_{i-1}) - PsiBar^T PsiBar || / || . ||.
    double psi_decorrelation = 0.0;
};

// Supported (l, k) pairs in the flattening order used by
// ReplicationResult::weight_trajectory.
std::vector<std::pair<int, int>> supported_entries(const Topology& t);

// Runs one replication of the ATC recursion for n_iters iterations
// from w_k = 0. Adaptive policies update in a fixed order: adapt all
// nodes, then per node Gramian -> EMA -> KKT -> combine.
// Each node draws from its own substream derive_seed(data_seed, {k}),
// so trajectories are reproducible and policies can be compared on
// identical data streams.
ReplicationResult run_replication(const Topology& t, const std::vector<double>& steps,
                                  const GradientFn& grad, const Eigen::VectorXd& w_star,
                                  const PolicySpec& policy, long n_iters,
                                  std::uint64_t data_seed,
                                  const ReplicationOptions& options = {});

}  // namespace diffnet
