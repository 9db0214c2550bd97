#include "paracool/fitkit.hpp"

#include <cmath>
#include <random>

namespace paracool::fitkit {

void ScanData::validate(int free_params) const {
    if (x.size() != y.size() || x.size() != sigma.size())
        throw Error("scan data columns must have equal length");
    if (x.size() < free_params + 1)
        throw Error("scan data needs at least free-parameter count + 1 points");
    if ((sigma.array() <= 0.0).any()) throw Error("scan uncertainties must be positive");
}

namespace {

Eigen::VectorXd clamp_to_bounds(Eigen::VectorXd p, const FitOptions& o) {
    if (o.lower.size() == p.size()) p = p.cwiseMax(o.lower);
    if (o.upper.size() == p.size()) p = p.cwiseMin(o.upper);
    return p;
}

Eigen::VectorXd residuals(const ScanData& d, const ModelFn& f, const Eigen::VectorXd& p) {
    Eigen::VectorXd r(d.x.size());
    for (int i = 0; i < d.x.size(); ++i) r(i) = (d.y(i) - f(d.x(i), p)) / d.sigma(i);
    return r;
}

Eigen::MatrixXd jacobian(const ScanData& d, const ModelFn& f, const Eigen::VectorXd& p,
                         const FitOptions& o) {
    // d residual / d param by central differences, relative step 1e-6; steps
    // shrink to one-sided at an active bound
    const int np = static_cast<int>(p.size());
    Eigen::MatrixXd jac(d.x.size(), np);
    for (int j = 0; j < np; ++j) {
        const double h = 1e-6 * std::max(std::abs(p(j)), 1.0);
        Eigen::VectorXd pp = p, pm = p;
        pp(j) += h;
        pm(j) -= h;
        if (o.upper.size() == p.size()) pp(j) = std::min(pp(j), o.upper(j));
        if (o.lower.size() == p.size()) pm(j) = std::max(pm(j), o.lower(j));
        const double denom = pp(j) - pm(j);
        if (denom <= 0.0) throw SingularJacobian("parameter pinned by its bounds");
        jac.col(j) = (residuals(d, f, pp) - residuals(d, f, pm)) / denom;
    }
    return jac;
}

struct LmOutcome {
    Eigen::VectorXd params;
    double chi2 = 0.0;
    bool converged = false;
    int iterations = 0;
};

LmOutcome lm_minimize(const ScanData& d, const ModelFn& f, Eigen::VectorXd p,
                      const FitOptions& o) {
    p = clamp_to_bounds(std::move(p), o);
    double chi2 = residuals(d, f, p).squaredNorm();
    double lambda = 1e-3;
    LmOutcome out;
    for (int iter = 1; iter <= o.max_iterations; ++iter) {
        out.iterations = iter;
        const Eigen::MatrixXd jac = jacobian(d, f, p, o);
        const Eigen::VectorXd r = residuals(d, f, p);
        const Eigen::MatrixXd jtj = jac.transpose() * jac;
        const Eigen::VectorXd g = jac.transpose() * r;  // descent direction is -g... see below
        if (!jtj.allFinite() || !g.allFinite())
            throw SingularJacobian("non-finite Jacobian during fit");

        bool improved = false;
        for (int tries = 0; tries < 40; ++tries) {
            Eigen::MatrixXd damped = jtj;
            damped.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-30);
            // residual r = (y - f)/sigma, dr/dp = -df/dp / sigma = jac, so the
            // Gauss-Newton step solves (J^T J) dp = -J^T r
            const Eigen::VectorXd step = damped.ldlt().solve(-g);
            if (!step.allFinite()) {
                lambda *= 10.0;
                continue;
            }
            const Eigen::VectorXd cand = clamp_to_bounds(p + step, o);
            const double c2 = residuals(d, f, cand).squaredNorm();
            if (c2 < chi2) {
                const double rel_drop = (chi2 - c2) / std::max(chi2, 1e-300);
                const double rel_step =
                    (cand - p).norm() / std::max(p.norm(), 1.0);
                p = cand;
                chi2 = c2;
                lambda = std::max(lambda * 0.3, 1e-12);
                improved = true;
                if (rel_drop < o.ftol || rel_step < o.xtol) {
                    out.params = p;
                    out.chi2 = chi2;
                    out.converged = true;
                    return out;
                }
                break;
            }
            lambda *= 10.0;
            if (lambda > 1e14) break;
        }
        if (!improved) {
            // no downhill step exists: local minimum to solver precision
            out.params = p;
            out.chi2 = chi2;
            out.converged = true;
            return out;
        }
    }
    out.params = p;
    out.chi2 = chi2;
    out.converged = false;
    return out;
}

} // namespace

FitResult fit_model(const ScanData& data, const ModelFn& model,
                    const std::vector<std::string>& names, const Eigen::VectorXd& guess,
                    const FitOptions& options) {
    const int np = static_cast<int>(guess.size());
    data.validate(np);
    if (!names.empty() && static_cast<int>(names.size()) != np)
        throw Error("parameter name count does not match guess length");

    LmOutcome best = lm_minimize(data, model, guess, options);
    if (!best.converged && options.multistart > 0) {
        std::mt19937_64 rng(options.seed);
        std::normal_distribution<double> dist(0.0, 0.1);
        for (int k = 0; k < options.multistart; ++k) {
            Eigen::VectorXd p = guess;
            for (int j = 0; j < np; ++j)
                p(j) *= 1.0 + dist(rng);
            LmOutcome trial = lm_minimize(data, model, p, options);
            if (trial.converged && (!best.converged || trial.chi2 < best.chi2)) best = trial;
        }
    }
    if (!best.converged && options.throw_on_failure)
        throw NoConvergence("fit did not converge within iteration budget");

    FitResult res;
    res.names = names;
    res.params = best.params;
    res.converged = best.converged;
    res.iterations = best.iterations;

    const Eigen::MatrixXd jac = jacobian(data, model, best.params, options);
    Eigen::MatrixXd jtj = jac.transpose() * jac;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(jtj);
    if (!lu.isInvertible()) {
        // ridge-regularize only to report something sensible
        jtj.diagonal().array() += 1e-12 * jtj.diagonal().maxCoeff() + 1e-300;
        lu.compute(jtj);
        if (!lu.isInvertible()) throw SingularJacobian("singular normal equations at optimum");
    }
    res.covariance = lu.inverse();
    res.confidence_68 = res.covariance.diagonal().cwiseMax(0.0).cwiseSqrt();
    const int dof = static_cast<int>(data.x.size()) - np;
    res.chi2_reduced = dof > 0 ? best.chi2 / dof : 0.0;
    return res;
}

double nbar_from_sidebands(double p_rsb, double p_bsb) {
    if (p_rsb < 0.0 || p_bsb <= 0.0 || p_rsb > 1.0 || p_bsb > 1.0)
        throw Error("sideband probabilities must lie in [0,1] with p_bsb > 0");
    const double ratio = p_rsb / p_bsb;
    if (ratio >= 1.0) throw RatioOutOfRange("sideband ratio >= 1 has no thermal solution");
    return ratio / (1.0 - ratio);
}

LinearFit fit_heating_rate(const ScanData& data) {
    data.validate(2);
    if (data.x.size() < 3) throw Error("heating-rate fit needs at least 3 points");
    const double span = data.x.maxCoeff() - data.x.minCoeff();
    if (span <= 0.0) throw DegenerateAbscissa("heating-rate fit needs distinct delays");

    // weighted normal equations for y = a + b x
    const Eigen::ArrayXd w = data.sigma.array().square().inverse();
    const double sw = w.sum();
    const double sx = (w * data.x.array()).sum();
    const double sy = (w * data.y.array()).sum();
    const double sxx = (w * data.x.array().square()).sum();
    const double sxy = (w * data.x.array() * data.y.array()).sum();
    const double det = sw * sxx - sx * sx;
    if (det <= 0.0) throw DegenerateAbscissa("degenerate design matrix");

    LinearFit fit;
    const double slope_per_ms = (sw * sxy - sx * sy) / det;
    fit.intercept = (sxx * sy - sx * sxy) / det;
    fit.slope_per_s = slope_per_ms * 1e3;
    fit.slope_sigma_per_s = std::sqrt(sw / det) * 1e3;
    fit.intercept_sigma = std::sqrt(sxx / det);
    return fit;
}

FitResult fit_kerr_occupations(const ScanData& data, const spectro::KerrSpectrumParams& fixed,
                               double guess_nbar_xr, double guess_nbar_yr) {
    ModelFn model = [fixed](double f_mhz, const Eigen::VectorXd& p) {
        spectro::KerrSpectrumParams k = fixed;
        k.nbar_xr = p(0);
        k.nbar_yr = p(1);
        return spectro::kerr_spectrum(k, f_mhz);
    };
    FitOptions opt;
    opt.lower = Eigen::Vector2d(0.0, 0.0);
    Eigen::VectorXd guess(2);
    guess << guess_nbar_xr, guess_nbar_yr;
    return fit_model(data, model, {"nbar_xr", "nbar_yr"}, guess, opt);
}

NamedModel named_model(const std::string& name) {
    if (name == "freq_scan") {
        return {{"amplitude", "r0_khz", "tau_us", "delta_ws_mhz", "offset"},
                [](double x, const Eigen::VectorXd& p) {
                    spectro::FreqScanParams q{p(0), p(1), p(2), p(3), p(4)};
                    return spectro::freq_scan_model(q, x);
                }};
    }
    if (name == "time_scan") {
        return {{"amplitude", "r0_khz", "phase", "gamma_per_ms", "offset"},
                [](double x, const Eigen::VectorXd& p) {
                    spectro::TimeScanParams q{p(0), p(1), p(2), p(3), p(4)};
                    return spectro::time_scan_model(q, x);
                }};
    }
    if (name == "heating") {
        return {{"slope_per_s", "intercept"}, [](double x_ms, const Eigen::VectorXd& p) {
                    return p(1) + p(0) * x_ms * 1e-3;
                }};
    }
    throw Error("unknown model '" + name + "'");
}

void gauge_fix(const std::string& model_name, Eigen::VectorXd& params) {
    // freq_scan depends on r0 and tau only through even functions
    if (model_name == "freq_scan" && params.size() == 5) {
        params(1) = std::abs(params(1));
        params(2) = std::abs(params(2));
    }
    if (model_name == "time_scan" && params.size() == 5) {
        // (A, r0, phi) -> (-A, -r0, -phi) leaves the model invariant
        if (params(1) < 0.0) {
            params(1) = -params(1);
            params(0) = -params(0);
            params(2) = -params(2);
        }
        if (params(0) < 0.0) {
            params(0) = -params(0);
            params(2) += M_PI;
        }
        double phi = std::fmod(params(2), 2.0 * M_PI);
        if (phi <= -M_PI) phi += 2.0 * M_PI;
        if (phi > M_PI) phi -= 2.0 * M_PI;
        params(2) = phi;
    }
}

} // namespace paracool::fitkit
