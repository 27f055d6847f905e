#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "diffnet/rng.hpp"

namespace diffnet {

// Per-node regularized logistic risk
//   J_k(w) = E ln(1 + exp(-gamma h^T w)) + (reg/2) ||w||^2
// with labels gamma uniform on {+1,-1} and features
// h | gamma ~ N(gamma * mean_scale * 1_M, var * I_M).
struct LogisticNodeModel {
    int dim = 0;
    double mean_scale = 1.0;  // mu_h
    double var = 1.0;         // sigma_h^2
    double reg = 0.5;         // rho (l2 weight)
    double step = 0.005;      // mu (step size)
};

struct Datum {
    double label = 1.0;  // +1 or -1
    Eigen::VectorXd features;
};

// Numerically stable 1 / (1 + exp(-x)).
double sigmoid(double x);

// One streaming sample (gamma, h) from the node's distribution.
Datum sample_datum(const LogisticNodeModel& model, Rng& rng);

// Gradient of the instantaneous loss at w:
//   -gamma h sigmoid(-gamma h^T w) + reg w.
Eigen::VectorXd stochastic_gradient(const LogisticNodeModel& model, const Eigen::VectorXd& w,
                                    const Datum& datum);

// Sample mean of stochastic_gradient over n_samples fresh draws.
// Deterministic given seed.
Eigen::VectorXd expected_gradient(const LogisticNodeModel& model, const Eigen::VectorXd& w,
                                  long n_samples, std::uint64_t seed);

struct GroundTruth {
    Eigen::VectorXd w_star;
    std::vector<double> grad_residuals;  // per-node ||grad J_k(w_star)|| estimates
};

struct CalibrationOptions {
    long calibration_samples = 1'000'000;  // scalar-margin draws per s_k evaluation
    long verify_samples = 1'000'000;       // full-dimension residual check
    int max_iterations = 200;
};

// Adjusts the regularizers so all nodes share one minimizer. The data
// model is symmetric under permutation of coordinates, so for w = c 1_M
// the unregularized expected gradient is itself proportional to 1_M;
// per node the stationarity condition collapses to the scalar equation
//   reg_k * c = s_k(c),
// where s_k(c) is the per-coordinate magnitude of the negative
// unregularized expected gradient at c 1_M, Monte Carlo estimated via
// the margin u = 1^T (gamma h) ~ N(M mu_h, M sigma_h^2). The common
// scale c is root-found so mean_k reg_k equals target_reg. Writes the
// adjusted reg back into models.
GroundTruth calibrate_common_minimizer(std::vector<LogisticNodeModel>& models, double target_reg,
                                       double tol, std::uint64_t seed,
                                       const CalibrationOptions& opts = {});

struct NodeStatistics {
    Eigen::MatrixXd hessian_at_opt;  // H_k at w_star
    Eigen::MatrixXd noise_cov;       // R_sk, gradient-noise covariance at w_star
    double noise_power = 0.0;        // trace(R_sk)
};

// Sample-mean Hessian and gradient-noise covariance at w_star.
// Deterministic given seed.
NodeStatistics estimate_node_statistics(const LogisticNodeModel& model,
                                        const Eigen::VectorXd& w_star, long n_samples,
                                        std::uint64_t seed);

// Exact-gradient quadratic objective (1/2)||w - target||^2 with optional
// isotropic Gaussian gradient noise. Debug stand-in for the logistic
// model in engine tests.
struct QuadraticNodeModel {
    Eigen::VectorXd target;
    double noise_std = 0.0;

    Eigen::VectorXd stochastic_gradient(const Eigen::VectorXd& w, Rng& rng) const;
};

}  // namespace diffnet
