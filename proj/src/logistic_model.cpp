#include "diffnet/logistic_model.hpp"

#include <cmath>
#include <sstream>

#include "diffnet/errors.hpp"

namespace diffnet {

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

Datum sample_datum(const LogisticNodeModel& model, Rng& rng) {
    Datum d;
    d.label = rng.bernoulli(0.5) ? 1.0 : -1.0;
    const double sd = std::sqrt(model.var);
    d.features.resize(model.dim);
    for (int j = 0; j < model.dim; ++j) {
        d.features(j) = d.label * model.mean_scale + sd * rng.normal();
    }
    return d;
}

Eigen::VectorXd stochastic_gradient(const LogisticNodeModel& model, const Eigen::VectorXd& w,
                                    const Datum& datum) {
    if (w.size() != datum.features.size()) {
        throw SimulationError("stochastic_gradient: dimension mismatch");
    }
    const double margin = datum.label * datum.features.dot(w);
    return (-datum.label * sigmoid(-margin)) * datum.features + model.reg * w;
}

Eigen::VectorXd expected_gradient(const LogisticNodeModel& model, const Eigen::VectorXd& w,
                                  long n_samples, std::uint64_t seed) {
    if (n_samples < 1) {
        throw SimulationError("expected_gradient: n_samples must be >= 1");
    }
    Rng rng(seed);
    Eigen::VectorXd acc = Eigen::VectorXd::Zero(w.size());
    for (long i = 0; i < n_samples; ++i) {
        acc += stochastic_gradient(model, w, sample_datum(model, rng));
    }
    return acc / static_cast<double>(n_samples);
}

namespace {

// s_k(c): per-coordinate magnitude of the negative unregularized
// expected gradient at c 1_M, via the coordinate average
// (u/M) sigmoid(-c u) with the margin u = 1^T (gamma h).
double margin_gradient_scale(const LogisticNodeModel& model, double c,
                             const std::vector<double>& z_samples) {
    const double m = static_cast<double>(model.dim);
    const double mean = m * model.mean_scale;
    const double sd = std::sqrt(m * model.var);
    double acc = 0.0;
    for (double z : z_samples) {
        const double u = mean + sd * z;
        acc += (u / m) * sigmoid(-c * u);
    }
    return acc / static_cast<double>(z_samples.size());
}

}  // namespace

GroundTruth calibrate_common_minimizer(std::vector<LogisticNodeModel>& models, double target_reg,
                                       double tol, std::uint64_t seed,
                                       const CalibrationOptions& opts) {
    if (models.empty()) {
        throw CalibrationError("calibrate: no models");
    }
    if (!(target_reg > 0.0)) {
        throw CalibrationError("calibrate: target_reg must be positive");
    }
    const int dim = models[0].dim;
    for (const auto& m : models) {
        if (m.dim != dim) {
            throw CalibrationError("calibrate: all nodes must share the same dimension");
        }
    }

    // Common random numbers across all c evaluations keep the objective
    // a smooth deterministic function of c.
    Rng zrng(derive_seed(seed, Stream::Calibration));
    std::vector<double> z(static_cast<std::size_t>(opts.calibration_samples));
    for (double& v : z) {
        v = zrng.normal();
    }

    const auto mean_reg = [&](double c) {
        double acc = 0.0;
        for (const auto& m : models) {
            acc += margin_gradient_scale(m, c, z) / c;
        }
        return acc / static_cast<double>(models.size());
    };

    // Bracket the root of mean_reg(c) = target_reg; mean_reg is strictly
    // decreasing in c and diverges as c -> 0+.
    double lo = 1e-6;
    double hi = 1.0;
    double flo = mean_reg(lo) - target_reg;
    double fhi = mean_reg(hi) - target_reg;
    int guard = 0;
    while (flo < 0.0 && guard++ < 60) {
        hi = lo;
        fhi = flo;
        lo *= 0.5;
        flo = mean_reg(lo) - target_reg;
    }
    guard = 0;
    while (fhi > 0.0 && guard++ < 60) {
        lo = hi;
        flo = fhi;
        hi *= 2.0;
        fhi = mean_reg(hi) - target_reg;
    }
    if (flo < 0.0 || fhi > 0.0) {
        throw CalibrationError("calibrate: failed to bracket the common-minimizer scale");
    }

    // Illinois variant of regula falsi: superlinear, bracket-safe.
    double c = 0.5 * (lo + hi);
    for (int it = 0; it < opts.max_iterations && (hi - lo) > 1e-14 * std::max(1.0, hi); ++it) {
        double cand = (lo * fhi - hi * flo) / (fhi - flo);
        const double margin = 1e-3 * (hi - lo);
        if (!(cand > lo + margin) || !(cand < hi - margin)) {
            cand = 0.5 * (lo + hi);
        }
        const double fc = mean_reg(cand) - target_reg;
        if (fc > 0.0) {
            if (flo > 0.0) {
                fhi *= 0.5;  // Illinois weighting against stagnation
            }
            lo = cand;
            flo = fc;
        } else {
            if (fhi < 0.0) {
                flo *= 0.5;
            }
            hi = cand;
            fhi = fc;
        }
        c = 0.5 * (lo + hi);
    }

    for (auto& m : models) {
        const double rho = margin_gradient_scale(m, c, z) / c;
        if (!(rho > 0.0)) {
            std::ostringstream os;
            os << "calibrate: non-positive regularizer " << rho
               << " (inconsistent data parameters)";
            throw CalibrationError(os.str());
        }
        m.reg = rho;
    }

    GroundTruth gt;
    gt.w_star = c * Eigen::VectorXd::Ones(dim);
    gt.grad_residuals.resize(models.size());
    for (std::size_t k = 0; k < models.size(); ++k) {
        const Eigen::VectorXd g =
            expected_gradient(models[k], gt.w_star, opts.verify_samples,
                              derive_seed(seed, Stream::Verification, k));
        gt.grad_residuals[k] = g.norm();
        if (!(gt.grad_residuals[k] < tol)) {
            std::ostringstream os;
            os << "calibrate: node " << k << " gradient residual " << gt.grad_residuals[k]
               << " exceeds tolerance " << tol;
            throw CalibrationError(os.str());
        }
    }
    return gt;
}

NodeStatistics estimate_node_statistics(const LogisticNodeModel& model,
                                        const Eigen::VectorXd& w_star, long n_samples,
                                        std::uint64_t seed) {
    if (n_samples < 1000) {
        throw SimulationError("estimate_node_statistics: n_samples must be >= 1000");
    }
    const int m = model.dim;
    Rng rng(seed);
    Eigen::MatrixXd hess_acc = Eigen::MatrixXd::Zero(m, m);
    Eigen::MatrixXd grad_sq_acc = Eigen::MatrixXd::Zero(m, m);
    Eigen::VectorXd grad_acc = Eigen::VectorXd::Zero(m);
    for (long i = 0; i < n_samples; ++i) {
        const Datum d = sample_datum(model, rng);
        const double margin = d.label * d.features.dot(w_star);
        const double s = sigmoid(margin);
        // Hessian of the instantaneous loss: h h^T s(1-s), label-free.
        hess_acc.selfadjointView<Eigen::Lower>().rankUpdate(d.features, s * (1.0 - s));
        const Eigen::VectorXd g = stochastic_gradient(model, w_star, d);
        grad_acc += g;
        grad_sq_acc.selfadjointView<Eigen::Lower>().rankUpdate(g, 1.0);
    }
    const double n = static_cast<double>(n_samples);
    NodeStatistics out;
    Eigen::MatrixXd hess = Eigen::MatrixXd(hess_acc.selfadjointView<Eigen::Lower>()) / n +
                           model.reg * Eigen::MatrixXd::Identity(m, m);
    const Eigen::VectorXd mean = grad_acc / n;
    Eigen::MatrixXd cov = (Eigen::MatrixXd(grad_sq_acc.selfadjointView<Eigen::Lower>()) -
                           n * mean * mean.transpose()) /
                          (n - 1.0);
    out.hessian_at_opt = 0.5 * (hess + hess.transpose());
    out.noise_cov = 0.5 * (cov + cov.transpose());
    out.noise_power = out.noise_cov.trace();
    return out;
}

Eigen::VectorXd QuadraticNodeModel::stochastic_gradient(const Eigen::VectorXd& w, Rng& rng) const {
    Eigen::VectorXd g = w - target;
    if (noise_std > 0.0) {
        for (Eigen::Index j = 0; j < g.size(); ++j) {
            g(j) += noise_std * rng.normal();
        }
    }
    return g;
}

}  // namespace diffnet
