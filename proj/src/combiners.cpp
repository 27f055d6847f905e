#include "diffnet/combiners.hpp"

#include <algorithm>
#include <cmath>

#include "diffnet/errors.hpp"

namespace diffnet {

void CombinationMatrix::renormalize_columns() {
    for (Eigen::Index k = 0; k < entries.cols(); ++k) {
        const double s = entries.col(k).sum();
        if (s != 0.0) {
            entries.col(k) /= s;
        }
    }
}

double CombinationMatrix::max_support_violation(const Topology& t) const {
    double worst = 0.0;
    for (int k = 0; k < n_nodes(); ++k) {
        for (int l = 0; l < n_nodes(); ++l) {
            if (!t.linked(l, k)) {
                worst = std::max(worst, std::abs(entries(l, k)));
            }
        }
    }
    return worst;
}

double CombinationMatrix::max_column_sum_error() const {
    double worst = 0.0;
    for (Eigen::Index k = 0; k < entries.cols(); ++k) {
        worst = std::max(worst, std::abs(1.0 - entries.col(k).sum()));
    }
    return worst;
}

long CombinationMatrix::count_negative_entries() const {
    long count = 0;
    for (Eigen::Index k = 0; k < entries.cols(); ++k) {
        for (Eigen::Index l = 0; l < entries.rows(); ++l) {
            if (entries(l, k) < 0.0) {
                ++count;
            }
        }
    }
    return count;
}

StaticRule static_rule_from_name(const std::string& name) {
    if (name == "uniform") return StaticRule::Uniform;
    if (name == "metropolis") return StaticRule::Metropolis;
    if (name == "max-degree") return StaticRule::MaxDegree;
    if (name == "relative-variance") return StaticRule::RelativeVariance;
    throw ConfigError("unknown static policy name: " + name);
}

CombinationMatrix static_policy(StaticRule rule, const Topology& t,
                                const std::vector<double>& theta) {
    const int n = t.n_nodes();
    CombinationMatrix a(n);
    switch (rule) {
        case StaticRule::Uniform:
            for (int k = 0; k < n; ++k) {
                for (int l : t.neighbors(k)) {
                    a.entries(l, k) = 1.0 / static_cast<double>(t.degree(k));
                }
            }
            break;
        case StaticRule::Metropolis:
            for (int k = 0; k < n; ++k) {
                double off = 0.0;
                for (int l : t.neighbors(k)) {
                    if (l != k) {
                        const double w = 1.0 / static_cast<double>(std::max(t.degree(k), t.degree(l)));
                        a.entries(l, k) = w;
                        off += w;
                    }
                }
                a.entries(k, k) = 1.0 - off;
            }
            break;
        case StaticRule::MaxDegree: {
            const double n_max = static_cast<double>(t.max_degree());
            for (int k = 0; k < n; ++k) {
                for (int l : t.neighbors(k)) {
                    if (l != k) {
                        a.entries(l, k) = 1.0 / n_max;
                    }
                }
                a.entries(k, k) = 1.0 - static_cast<double>(t.degree(k) - 1) / n_max;
            }
            break;
        }
        case StaticRule::RelativeVariance: {
            if (static_cast<int>(theta.size()) != n) {
                throw ConfigError("relative-variance policy: theta must have one entry per node");
            }
            for (double th : theta) {
                if (!(th > 0.0)) {
                    throw ConfigError("relative-variance policy: theta entries must be positive");
                }
            }
            // Scale-invariant rule; dividing by the max conditions the sums so
            // that equal inputs reduce to the uniform weights bit for bit.
            const double top = *std::max_element(theta.begin(), theta.end());
            std::vector<double> scaled(theta.size());
            for (std::size_t i = 0; i < theta.size(); ++i) {
                scaled[i] = theta[i] / top;
            }
            for (int k = 0; k < n; ++k) {
                double denom = 0.0;
                for (int l : t.neighbors(k)) {
                    denom += scaled[static_cast<std::size_t>(l)];
                }
                for (int l : t.neighbors(k)) {
                    a.entries(l, k) = scaled[static_cast<std::size_t>(l)] / denom;
                }
            }
            break;
        }
    }
    a.renormalize_columns();
    return a;
}

KktSolution solve_kkt(const Eigen::MatrixXd& q_in) {
    const Eigen::Index n = q_in.rows();
    if (n == 0 || q_in.cols() != n) {
        throw SimulationError("solve_kkt: q must be square and non-empty");
    }
    const Eigen::MatrixXd q_sym = 0.5 * (q_in + q_in.transpose());

    // Divide out a power of two near the largest diagonal entry before
    // bordering. Gramians scale like step^2 and can sit many orders of
    // magnitude away from the unit border, which would otherwise drive
    // the pivoting. Power-of-two division is exact, so q and s*q with s
    // a power of two solve bit-identically: the weights cannot depend on
    // the overall scale of the objective.
    double top = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        top = std::max(top, std::abs(q_sym(i, i)));
    }
    double unit = 1.0;
    if (top > 0.0 && std::isfinite(top)) {
        int expo = 0;
        std::frexp(top, &expo);
        unit = std::ldexp(1.0, expo);
    }
    const Eigen::MatrixXd q = q_sym / unit;

    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + 1, n + 1);
    kkt.topLeftCorner(n, n) = q;
    kkt.topRightCorner(n, 1).setOnes();
    kkt.bottomLeftCorner(1, n).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n + 1);
    rhs(n) = 1.0;

    KktSolution out;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    Eigen::VectorXd x;
    if (lu.isInvertible()) {
        x = lu.solve(rhs);
    } else {
        // Singular KKT matrix: several optima exist. The complete
        // orthogonal decomposition yields the minimum-norm one.
        out.used_fallback = true;
        Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(kkt);
        x = cod.solve(rhs);
    }
    out.weights = x.head(n);
    double lambda = x(n);

    const double s = out.weights.sum();
    if (std::abs(s) < 1e-300 || !std::isfinite(s)) {
        // Hopelessly degenerate numerics; uniform is always feasible.
        out.used_fallback = true;
        out.weights = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
        lambda = -out.weights.dot(q * out.weights);
    } else {
        out.weights /= s;
    }
    // Stationarity is judged in normalized units (scale-free), then the
    // multiplier and residual are reported in the units of the input.
    const double res = (q * out.weights + lambda * Eigen::VectorXd::Ones(n)).norm();
    if (res > 1e-8 * (1.0 + q.norm())) {
        out.used_fallback = true;
    }
    out.multiplier = lambda * unit;
    out.residual = res * unit;
    return out;
}

void gramian_update(GramianCombinerState& state, const Eigen::MatrixXd& psi_block) {
    if (psi_block.rows() != state.psi_bar.rows() || psi_block.cols() != state.psi_bar.cols()) {
        throw SimulationError("gramian_update: psi block dimensions do not match state");
    }
    const Eigen::MatrixXd centered = psi_block - state.psi_bar;
    const Eigen::MatrixXd gram = centered.transpose() * centered;
    state.q_hat = (1.0 - state.alpha1) * state.q_hat + state.alpha1 * gram;
    state.psi_bar = (1.0 - state.alpha2) * state.psi_bar + state.alpha2 * psi_block;
}

KktSolution adaptive_weights_full(const GramianCombinerState& state) {
    return solve_kkt(state.q_hat);
}

CombinationMatrix diagonal_update_and_weights(std::vector<DiagonalCombinerState>& states,
                                              const std::vector<Eigen::VectorXd>& psi,
                                              const Topology& t) {
    const int n = t.n_nodes();
    if (static_cast<int>(states.size()) != n || static_cast<int>(psi.size()) != n) {
        throw SimulationError("diagonal_update_and_weights: need one state and one psi per node");
    }
    for (int k = 0; k < n; ++k) {
        auto& st = states[static_cast<std::size_t>(k)];
        const auto& p = psi[static_cast<std::size_t>(k)];
        st.q = (1.0 - st.alpha1) * st.q + st.alpha1 * (p - st.psi_bar).squaredNorm();
        st.psi_bar = (1.0 - st.alpha2) * st.psi_bar + st.alpha2 * p;
    }
    CombinationMatrix a(n);
    for (int k = 0; k < n; ++k) {
        bool degenerate = false;
        for (int l : t.neighbors(k)) {
            if (states[static_cast<std::size_t>(l)].q < kDiagonalUnderflowGuard) {
                degenerate = true;
                break;
            }
        }
        if (degenerate) {
            for (int l : t.neighbors(k)) {
                a.entries(l, k) = 1.0 / static_cast<double>(t.degree(k));
            }
            continue;
        }
        double denom = 0.0;
        for (int l : t.neighbors(k)) {
            denom += 1.0 / states[static_cast<std::size_t>(l)].q;
        }
        for (int l : t.neighbors(k)) {
            a.entries(l, k) = (1.0 / states[static_cast<std::size_t>(l)].q) / denom;
        }
    }
    a.renormalize_columns();
    return a;
}

}  // namespace diffnet
