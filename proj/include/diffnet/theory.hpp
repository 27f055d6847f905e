#pragma once

#include <Eigen/Dense>
#include <vector>

#include "diffnet/combiners.hpp"
#include "diffnet/logistic_model.hpp"
#include "diffnet/topology.hpp"

namespace diffnet {

// Closed-form steady-state predictors. All pure functions.

// Limiting Gramian diagonal: entry k is (1/2) mu_k^2 sigma2_k.
std::vector<double> q_infinity(const std::vector<double>& mu, const std::vector<double>& sigma2);

// Limiting combination matrix: a_lk = theta_l / sum_{m in N_k} theta_m
// on the neighborhood, zero elsewhere. Identical to the static
// relative-variance rule.
CombinationMatrix a_infinity(const Topology& t, const std::vector<double>& theta);

// Perron vector of a_infinity: p_k proportional to
// theta_k * sum_{m in N_k} theta_m, normalized to sum 1. Verified
// against the fixed point A_inf p = p before returning.
std::vector<double> perron_vector(const Topology& t, const std::vector<double>& theta);

struct MsdPrediction {
    double linear = 0.0;
    double db = 0.0;
};

// Low-rank network MSD approximation:
//   (1/2) Tr[(sum_k mu_k p_k H_k)^{-1} (sum_k mu_k^2 p_k^2 R_k)].
MsdPrediction msd_low_rank(const std::vector<double>& mu, const std::vector<double>& perron,
                           const std::vector<Eigen::MatrixXd>& hessians,
                           const std::vector<Eigen::MatrixXd>& noise_covs);

struct SteadyStatePrediction {
    std::vector<double> q_inf_diag;
    std::vector<double> theta;
    CombinationMatrix a_inf{0};
    std::vector<double> perron;
    double msd_av = 0.0;
    double msd_av_db = 0.0;
};

// Assembles the full prediction record from per-node steps and
// numerically estimated statistics; theta_k = 1 / (mu_k^2 sigma2_k)
// with sigma2_k = trace(R_k).
SteadyStatePrediction predict_steady_state(const Topology& t, const std::vector<double>& mu,
                                           const std::vector<NodeStatistics>& stats);

}  // namespace diffnet
