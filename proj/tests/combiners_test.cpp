#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "diffnet/combiners.hpp"
#include "diffnet/errors.hpp"
#include "diffnet/rng.hpp"
#include "diffnet/topology.hpp"
#include "helpers.hpp"

using namespace diffnet;

namespace {

// Columns sum to one, support respected, for any rule output.
void check_left_stochastic(const CombinationMatrix& a, const Topology& t) {
    CHECK(a.max_support_violation(t) == 0.0);
    CHECK(a.max_column_sum_error() <= 1e-12);
}

}  // namespace

TEST_CASE("uniform weights on the complete graph are all equal") {
    const Topology t = testutil::complete(5);
    const CombinationMatrix a = static_policy(StaticRule::Uniform, t);
    for (int k = 0; k < 5; ++k) {
        for (int l = 0; l < 5; ++l) {
            CHECK(a.entries(l, k) == doctest::Approx(0.2).epsilon(1e-14));
        }
    }
    check_left_stochastic(a, t);
}

TEST_CASE("metropolis weights on a three-node path match the hand computation") {
    const Topology t = testutil::path(3);  // degrees with self: 2, 3, 2
    const CombinationMatrix a = static_policy(StaticRule::Metropolis, t);
    CHECK(a.entries(1, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(a.entries(0, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(a.entries(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-14));
    CHECK(a.entries(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
    CHECK(a.entries(2, 0) == 0.0);
    check_left_stochastic(a, t);
}

TEST_CASE("max-degree weights use the largest neighborhood size off the diagonal") {
    const Topology t = testutil::topo_from_edges(4, {{0, 1}, {1, 2}, {2, 3}, {1, 3}});
    const double n_max = static_cast<double>(t.max_degree());
    const CombinationMatrix a = static_policy(StaticRule::MaxDegree, t);
    for (int k = 0; k < 4; ++k) {
        for (int l : t.neighbors(k)) {
            if (l != k) {
                CHECK(a.entries(l, k) == doctest::Approx(1.0 / n_max).epsilon(1e-14));
            }
        }
    }
    check_left_stochastic(a, t);
}

TEST_CASE("relative-variance weights with equal inputs collapse to the uniform rule") {
    const Topology t = generate_topology(7, GraphModel::Random, 3, 0.5);
    const CombinationMatrix u = static_policy(StaticRule::Uniform, t);
    const std::vector<double> theta(7, 0.3721349);
    const CombinationMatrix rv = static_policy(StaticRule::RelativeVariance, t, theta);
    CHECK((u.entries - rv.entries).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("relative-variance weights are proportional to the inputs inside a neighborhood") {
    const Topology t = testutil::complete(2);
    const CombinationMatrix a =
        static_policy(StaticRule::RelativeVariance, t, {1.0, 3.0});
    CHECK(a.entries(0, 0) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(a.entries(1, 0) == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(a.entries(0, 1) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK(a.entries(1, 1) == doctest::Approx(0.75).epsilon(1e-14));
    check_left_stochastic(a, t);
}

TEST_CASE("relative-variance weights reject missing or non-positive inputs") {
    const Topology t = testutil::complete(3);
    CHECK_THROWS_AS(static_policy(StaticRule::RelativeVariance, t, {1.0, 2.0}), ConfigError);
    CHECK_THROWS_AS(static_policy(StaticRule::RelativeVariance, t, {1.0, 0.0, 2.0}), ConfigError);
}

TEST_CASE("every static rule produces a valid left-stochastic supported matrix") {
    Rng rng(41);
    for (int trial = 0; trial < 10; ++trial) {
        const Topology t = generate_topology(9, GraphModel::Random, 100 + trial, 0.35);
        std::vector<double> theta(9);
        for (double& x : theta) {
            x = rng.log_uniform(1e-2, 1e2);
        }
        for (StaticRule rule : {StaticRule::Uniform, StaticRule::Metropolis,
                                StaticRule::MaxDegree, StaticRule::RelativeVariance}) {
            const CombinationMatrix a = static_policy(rule, t, theta);
            check_left_stochastic(a, t);
            CHECK(a.count_negative_entries() == 0);
        }
    }
}

TEST_CASE("rule names map to rules and unknown names are rejected") {
    CHECK(static_rule_from_name("uniform") == StaticRule::Uniform);
    CHECK(static_rule_from_name("metropolis") == StaticRule::Metropolis);
    CHECK(static_rule_from_name("max-degree") == StaticRule::MaxDegree);
    CHECK(static_rule_from_name("relative-variance") == StaticRule::RelativeVariance);
    CHECK_THROWS_AS(static_rule_from_name("magic"), ConfigError);
}

TEST_CASE("constrained solver returns uniform weights for the identity") {
    const KktSolution sol = solve_kkt(Eigen::MatrixXd::Identity(4, 4));
    for (int i = 0; i < 4; ++i) {
        CHECK(sol.weights(i) == doctest::Approx(0.25).epsilon(1e-14));
    }
    CHECK(std::abs(sol.weights.sum() - 1.0) <= 1e-15);
    CHECK_FALSE(sol.used_fallback);
}

TEST_CASE("constrained solver weights diagonal matrices by inverse entries") {
    Eigen::MatrixXd q = Eigen::Vector3d(1.0, 2.0, 4.0).asDiagonal();
    const KktSolution sol = solve_kkt(q);
    // c_l proportional to 1/q_l: (4/7, 2/7, 1/7).
    CHECK(sol.weights(0) == doctest::Approx(4.0 / 7.0).epsilon(1e-12));
    CHECK(sol.weights(1) == doctest::Approx(2.0 / 7.0).epsilon(1e-12));
    CHECK(sol.weights(2) == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
}

TEST_CASE("constrained solver falls back to the minimum-norm optimum when degenerate") {
    // Rank-one q: every feasible vector attains the same objective, the
    // minimum-norm representative is uniform.
    const Eigen::MatrixXd q = Eigen::MatrixXd::Ones(3, 3);
    const KktSolution sol = solve_kkt(q);
    CHECK(sol.used_fallback);
    for (int i = 0; i < 3; ++i) {
        CHECK(sol.weights(i) == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
    }
    CHECK(std::abs(sol.weights.sum() - 1.0) <= 1e-15);
}

TEST_CASE("constrained solver beats random feasible vectors") {
    Rng rng(55);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform() * 5.0);
        const int rank = (trial % 3 == 0) ? std::max(1, n - 1) : n;  // throw in singular cases
        const Eigen::MatrixXd q = testutil::random_psd(n, rank, rng);
        const KktSolution sol = solve_kkt(q);
        CHECK(std::abs(sol.weights.sum() - 1.0) <= 1e-12);
        const double obj = sol.weights.dot(q * sol.weights);
        for (int probe = 0; probe < 1000; ++probe) {
            Eigen::VectorXd v = testutil::random_vector(n, rng);
            double s = v.sum();
            if (std::abs(s) < 0.1) {
                v(0) += 1.0;
                s = v.sum();
            }
            v /= s;
            CHECK(obj <= v.dot(q * v) + 1e-9);
        }
    }
}

TEST_CASE("constrained solver agrees with the closed form when well-conditioned") {
    Rng rng(57);
    for (int trial = 0; trial < 50; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform() * 5.0);
        const Eigen::MatrixXd q =
            testutil::random_psd(n, n, rng) + Eigen::MatrixXd::Identity(n, n);
        const KktSolution sol = solve_kkt(q);
        const Eigen::VectorXd qinv_ones = q.inverse() * Eigen::VectorXd::Ones(n);
        const Eigen::VectorXd closed = qinv_ones / qinv_ones.sum();
        CHECK((sol.weights - closed).norm() <= 1e-8 * closed.norm());
    }
}

TEST_CASE("constrained solver is invariant to scaling the matrix") {
    Rng rng(59);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform() * 5.0);
        const Eigen::MatrixXd q =
            testutil::random_psd(n, n, rng) + 0.1 * Eigen::MatrixXd::Identity(n, n);
        const Eigen::VectorXd base = solve_kkt(q).weights;
        for (double s : {1e-6, 3.7, 1e6}) {
            CHECK((solve_kkt(s * q).weights - base).cwiseAbs().maxCoeff() <= 1e-10);
        }
    }
}

TEST_CASE("constrained solver rejects an empty matrix") {
    CHECK_THROWS_AS(solve_kkt(Eigen::MatrixXd()), SimulationError);
}

TEST_CASE("streaming update with unit rates copies the inputs") {
    GramianCombinerState st(3, 2, 1.0, 1.0);
    Rng rng(61);
    const Eigen::MatrixXd psi = testutil::random_matrix(3, 2, rng);
    gramian_update(st, psi);
    // alpha2 = 1: the mean jumps straight to psi. alpha1 = 1: the Gramian
    // becomes the centered product with the previous (zero) mean.
    CHECK((st.psi_bar - psi).cwiseAbs().maxCoeff() == 0.0);
    CHECK((st.q_hat - psi.transpose() * psi).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("streaming update of a constant block matches the geometric closed form") {
    const double a1 = 0.3, a2 = 0.2;
    const int dim = 3, width = 2, t_steps = 50;
    Rng rng(63);
    const Eigen::MatrixXd psi = testutil::random_matrix(dim, width, rng);

    GramianCombinerState st(dim, width, a1, a2);
    for (int i = 0; i < t_steps; ++i) {
        gramian_update(st, psi);
    }

    // With a constant input the mean follows a scalar geometric series
    // and each update sees the centered block (1-a2)^j psi, so the
    // Gramian is a weighted sum of powers of (1-a2)^2.
    Eigen::MatrixXd gram(width, width);
    for (int a = 0; a < width; ++a) {
        for (int b = 0; b < width; ++b) {
            double acc = 0.0;
            for (int r = 0; r < dim; ++r) {
                acc += psi(r, a) * psi(r, b);
            }
            gram(a, b) = acc;
        }
    }
    double coeff = 0.0;
    for (int j = 1; j <= t_steps; ++j) {
        coeff += a1 * std::pow(1.0 - a1, t_steps - j) * std::pow(1.0 - a2, 2 * (j - 1));
    }
    const Eigen::MatrixXd expected_q =
        std::pow(1.0 - a1, t_steps) * Eigen::MatrixXd::Identity(width, width) + coeff * gram;
    const double mean_coeff = 1.0 - std::pow(1.0 - a2, t_steps);

    CHECK((st.q_hat - expected_q).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((st.psi_bar - mean_coeff * psi).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("streaming update keeps the Gramian estimate symmetric positive semidefinite") {
    GramianCombinerState st(4, 3, 0.05, 0.1);
    Rng rng(65);
    for (int i = 0; i < 200; ++i) {
        gramian_update(st, testutil::random_matrix(4, 3, rng));
    }
    CHECK((st.q_hat - st.q_hat.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(st.q_hat);
    CHECK(es.eigenvalues().minCoeff() >= -1e-12 * (1.0 + st.q_hat.trace()));
}

TEST_CASE("streaming update rejects mismatched block shapes") {
    GramianCombinerState st(3, 2, 0.1, 0.1);
    CHECK_THROWS_AS(gramian_update(st, Eigen::MatrixXd::Zero(3, 4)), SimulationError);
}

TEST_CASE("adaptive weights from a fresh state are uniform") {
    const GramianCombinerState st(5, 4, 0.01, 0.03);  // q_hat starts at identity
    const KktSolution sol = adaptive_weights_full(st);
    for (int i = 0; i < 4; ++i) {
        CHECK(sol.weights(i) == doctest::Approx(0.25).epsilon(1e-13));
    }
}

TEST_CASE("adaptive weights downweight the noisier coordinate") {
    GramianCombinerState st(2, 2, 0.01, 0.03);
    st.q_hat = Eigen::Vector2d(1.0, 4.0).asDiagonal();
    const KktSolution sol = adaptive_weights_full(st);
    CHECK(sol.weights(0) == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(sol.weights(1) == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(std::abs(sol.weights.sum() - 1.0) <= 1e-12);
}

TEST_CASE("scalar-tracker weights mirror inverse variance within each neighborhood") {
    const Topology t = testutil::complete(2);
    std::vector<DiagonalCombinerState> states(2, DiagonalCombinerState(3, 1.0, 1.0));
    // One update with alpha1 = 1 sets q_k = ||psi_k||^2 directly.
    std::vector<Eigen::VectorXd> psi(2);
    psi[0] = Eigen::Vector3d(1.0, 0.0, 0.0);                      // q = 1
    psi[1] = Eigen::Vector3d(1.0, 1.0, 0.0);                      // q = 2
    const CombinationMatrix a = diagonal_update_and_weights(states, psi, t);
    CHECK(a.entries(0, 0) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(a.entries(1, 0) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    CHECK(a.entries(0, 1) == doctest::Approx(2.0 / 3.0).epsilon(1e-12));
    CHECK(a.max_column_sum_error() <= 1e-12);
}

TEST_CASE("scalar-tracker weights are uniform for equal variances") {
    const Topology t = generate_topology(6, GraphModel::Random, 71, 0.5);
    std::vector<DiagonalCombinerState> states(6, DiagonalCombinerState(2, 1.0, 1.0));
    std::vector<Eigen::VectorXd> psi(6, Eigen::Vector2d(0.6, 0.8));  // equal norms
    const CombinationMatrix a = diagonal_update_and_weights(states, psi, t);
    const CombinationMatrix u = static_policy(StaticRule::Uniform, t);
    CHECK((a.entries - u.entries).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("scalar-tracker falls back to uniform when a variance underflows") {
    const Topology t = testutil::complete(2);
    std::vector<DiagonalCombinerState> states(2, DiagonalCombinerState(2, 0.5, 0.5));
    // Zero inputs keep q at exactly zero, under the guard.
    std::vector<Eigen::VectorXd> psi(2, Eigen::VectorXd::Zero(2));
    const CombinationMatrix a = diagonal_update_and_weights(states, psi, t);
    for (int k = 0; k < 2; ++k) {
        for (int l = 0; l < 2; ++l) {
            CHECK(a.entries(l, k) == 0.5);
        }
    }
}

TEST_CASE("scalar tracker agrees with the full solver on diagonal Gramians") {
    // If the Gramian estimate is exactly diagonal, inverse-variance
    // weighting solves the same constrained problem.
    const Eigen::Vector3d q(0.5, 1.0, 2.5);
    GramianCombinerState st(4, 3, 0.01, 0.03);
    st.q_hat = q.asDiagonal();
    const Eigen::VectorXd full = adaptive_weights_full(st).weights;
    double denom = 0.0;
    for (int i = 0; i < 3; ++i) {
        denom += 1.0 / q(i);
    }
    for (int i = 0; i < 3; ++i) {
        CHECK(full(i) == doctest::Approx((1.0 / q(i)) / denom).epsilon(1e-12));
    }
}

TEST_CASE("scalar tracker requires one state and one vector per node") {
    const Topology t = testutil::complete(3);
    std::vector<DiagonalCombinerState> states(2, DiagonalCombinerState(2, 0.5, 0.5));
    std::vector<Eigen::VectorXd> psi(3, Eigen::VectorXd::Zero(2));
    CHECK_THROWS_AS(diagonal_update_and_weights(states, psi, t), SimulationError);
}
