#include "diffnet/theory.hpp"

#include <cmath>
#include <cstddef>

#include "diffnet/errors.hpp"

namespace diffnet {

namespace {

void check_sizes(std::size_t n, std::size_t got, const char* what) {
    if (got != n) {
        throw ConfigError(std::string(what) + ": expected " + std::to_string(n) + " entries, got " +
                          std::to_string(got));
    }
}

}  // namespace

std::vector<double> q_infinity(const std::vector<double>& mu, const std::vector<double>& sigma2) {
    check_sizes(mu.size(), sigma2.size(), "q_infinity");
    std::vector<double> q(mu.size());
    for (std::size_t k = 0; k < mu.size(); ++k) q[k] = 0.5 * mu[k] * mu[k] * sigma2[k];
    return q;
}

CombinationMatrix a_infinity(const Topology& t, const std::vector<double>& theta) {
    return static_policy(StaticRule::RelativeVariance, t, theta);
}

std::vector<double> perron_vector(const Topology& t, const std::vector<double>& theta) {
    const int n = t.n_nodes();
    check_sizes(static_cast<std::size_t>(n), theta.size(), "perron_vector");
    for (double th : theta) {
        if (!(th > 0.0)) throw ConfigError("perron_vector: theta entries must be positive");
    }

    std::vector<double> p(n);
    double total = 0.0;
    for (int k = 0; k < n; ++k) {
        double neigh = 0.0;
        for (int m : t.neighbors(k)) neigh += theta[m];
        p[k] = theta[k] * neigh;
        total += p[k];
    }
    for (double& v : p) v /= total;

    // p must be the Perron vector of the limiting matrix: A p = p.
    const CombinationMatrix a = a_infinity(t, theta);
    Eigen::Map<const Eigen::VectorXd> pv(p.data(), n);
    const double residual = (a.entries * pv - pv).lpNorm<Eigen::Infinity>();
    if (residual > 1e-10) {
        throw SimulationError("perron_vector: fixed-point residual " + std::to_string(residual));
    }
    return p;
}

MsdPrediction msd_low_rank(const std::vector<double>& mu, const std::vector<double>& perron,
                           const std::vector<Eigen::MatrixXd>& hessians,
                           const std::vector<Eigen::MatrixXd>& noise_covs) {
    const std::size_t n = mu.size();
    check_sizes(n, perron.size(), "msd_low_rank perron");
    check_sizes(n, hessians.size(), "msd_low_rank hessians");
    check_sizes(n, noise_covs.size(), "msd_low_rank noise_covs");
    if (n == 0) throw ConfigError("msd_low_rank: empty network");

    const Eigen::Index dim = hessians[0].rows();
    Eigen::MatrixXd h_bar = Eigen::MatrixXd::Zero(dim, dim);
    Eigen::MatrixXd r_bar = Eigen::MatrixXd::Zero(dim, dim);
    for (std::size_t k = 0; k < n; ++k) {
        h_bar += mu[k] * perron[k] * hessians[k];
        r_bar += mu[k] * mu[k] * perron[k] * perron[k] * noise_covs[k];
    }

    Eigen::FullPivLU<Eigen::MatrixXd> lu(h_bar);
    if (!lu.isInvertible()) {
        throw SimulationError("msd_low_rank: averaged Hessian is singular");
    }
    MsdPrediction out;
    out.linear = 0.5 * lu.solve(r_bar).trace();
    out.db = 10.0 * std::log10(out.linear);
    return out;
}

SteadyStatePrediction predict_steady_state(const Topology& t, const std::vector<double>& mu,
                                           const std::vector<NodeStatistics>& stats) {
    const int n = t.n_nodes();
    check_sizes(static_cast<std::size_t>(n), mu.size(), "predict_steady_state mu");
    check_sizes(static_cast<std::size_t>(n), stats.size(), "predict_steady_state stats");

    SteadyStatePrediction out;
    std::vector<double> sigma2(n);
    for (int k = 0; k < n; ++k) sigma2[k] = stats[k].noise_power;
    out.q_inf_diag = q_infinity(mu, sigma2);

    out.theta.resize(n);
    for (int k = 0; k < n; ++k) {
        const double denom = mu[k] * mu[k] * sigma2[k];
        if (!(denom > 0.0)) {
            throw SimulationError("predict_steady_state: nonpositive mu^2 sigma2 at node " +
                                  std::to_string(k));
        }
        out.theta[k] = 1.0 / denom;
    }

    out.a_inf = a_infinity(t, out.theta);
    out.perron = perron_vector(t, out.theta);

    std::vector<Eigen::MatrixXd> hessians(stats.size());
    std::vector<Eigen::MatrixXd> covs(stats.size());
    for (std::size_t k = 0; k < stats.size(); ++k) {
        hessians[k] = stats[k].hessian_at_opt;
        covs[k] = stats[k].noise_cov;
    }
    const MsdPrediction msd = msd_low_rank(mu, out.perron, hessians, covs);
    out.msd_av = msd.linear;
    out.msd_av_db = msd.db;
    return out;
}

}  // namespace diffnet
