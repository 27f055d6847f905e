#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "diffnet/topology.hpp"

namespace diffnet {

// N x N combination matrix A. Column k holds node k's weights and is
// supported on N_k; columns sum to 1. Entries may be negative: the
// optimizer is not constrained to the simplex.
struct CombinationMatrix {
    Eigen::MatrixXd entries;

    explicit CombinationMatrix(int n_nodes = 0)
        : entries(Eigen::MatrixXd::Zero(n_nodes, n_nodes)) {}

    int n_nodes() const { return static_cast<int>(entries.cols()); }

    // Scales each column to unit sum.
    void renormalize_columns();

    // max_l,k |a_lk| over entries outside the neighborhood support.
    double max_support_violation(const Topology& t) const;
    // max_k |1 - sum_l a_lk|.
    double max_column_sum_error() const;
    long count_negative_entries() const;
};

enum class StaticRule { Uniform, Metropolis, MaxDegree, RelativeVariance };

StaticRule static_rule_from_name(const std::string& name);

// Builds a static combination policy. theta is required (strictly
// positive, length N) for the relative-variance rule and ignored
// otherwise; the rule weights neighbor l by theta_l normalized over the
// neighborhood.
CombinationMatrix static_policy(StaticRule rule, const Topology& t,
                                const std::vector<double>& theta = {});

struct KktSolution {
    Eigen::VectorXd weights;    // c, with 1^T c = 1
    double multiplier = 0.0;    // lambda
    bool used_fallback = false; // rank-deficient path taken
    double residual = 0.0;      // ||q c + lambda 1||
};

// Minimizes c^T q c subject to 1^T c = 1 through the bordered KKT
// system. q is symmetrized before solving. When the KKT matrix is
// singular the minimum-norm optimum is returned (least-squares path,
// flagged in used_fallback).
KktSolution solve_kkt(const Eigen::MatrixXd& q);

// Per-node adaptive state for the full Gramian rule. q_hat starts at
// the identity and psi_bar at zero.
struct GramianCombinerState {
    Eigen::MatrixXd q_hat;    // n_k x n_k
    Eigen::MatrixXd psi_bar;  // M x n_k
    double alpha1 = 0.01;
    double alpha2 = 0.03;

    GramianCombinerState(int dim, int n_k, double a1, double a2)
        : q_hat(Eigen::MatrixXd::Identity(n_k, n_k)),
          psi_bar(Eigen::MatrixXd::Zero(dim, n_k)),
          alpha1(a1),
          alpha2(a2) {}
};

// One EMA step: q_hat absorbs the Gramian of (psi_block - psi_bar)
// computed against the PREVIOUS psi_bar, then psi_bar moves.
void gramian_update(GramianCombinerState& state, const Eigen::MatrixXd& psi_block);

// Combination weights for the current state: solve_kkt on q_hat.
KktSolution adaptive_weights_full(const GramianCombinerState& state);

// Per-node state for the diagonal (simplified) rule.
struct DiagonalCombinerState {
    double q = 1.0;
    Eigen::VectorXd psi_bar;  // length M
    double alpha1 = 0.01;
    double alpha2 = 0.03;

    DiagonalCombinerState(int dim, double a1, double a2)
        : psi_bar(Eigen::VectorXd::Zero(dim)), alpha1(a1), alpha2(a2) {}
};

// EMA-updates every node's scalar q and mean vector, then builds the
// inverse-q weights over each neighborhood. Neighborhoods containing a
// q below the underflow guard fall back to uniform for the iteration.
CombinationMatrix diagonal_update_and_weights(std::vector<DiagonalCombinerState>& states,
                                              const std::vector<Eigen::VectorXd>& psi,
                                              const Topology& t);

inline constexpr double kDiagonalUnderflowGuard = 1e-30;

}  // namespace diffnet
