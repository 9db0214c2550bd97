#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "paracool/errors.hpp"
#include "paracool/spectro.hpp"

namespace paracool::fitkit {

struct ScanData {
    Eigen::VectorXd x;
    Eigen::VectorXd y;
    Eigen::VectorXd sigma;
    std::string metadata;

    void validate(int free_params) const;
};

struct FitResult {
    std::vector<std::string> names;
    Eigen::VectorXd params;
    Eigen::MatrixXd covariance;
    Eigen::VectorXd confidence_68;  // per-parameter half-widths
    double chi2_reduced = 0.0;
    bool converged = false;
    int iterations = 0;
};

using ModelFn = std::function<double(double x, const Eigen::VectorXd& p)>;

struct FitOptions {
    int max_iterations = 200;
    double ftol = 1e-14;    // relative chi^2 change
    double xtol = 1e-12;    // relative step size
    Eigen::VectorXd lower;  // empty = unbounded
    Eigen::VectorXd upper;
    int multistart = 5;     // perturbed restarts on non-convergence
    std::uint64_t seed = 20260810;
    bool throw_on_failure = true;
};

/// Damped (Levenberg-Marquardt) weighted least squares with central-difference
/// Jacobians. Covariance from the local quadratic expansion at the optimum.
FitResult fit_model(const ScanData& data, const ModelFn& model,
                    const std::vector<std::string>& names, const Eigen::VectorXd& guess,
                    const FitOptions& options = {});

/// nbar = R/(1-R) with R = p_rsb/p_bsb
double nbar_from_sidebands(double p_rsb, double p_bsb);

struct LinearFit {
    double slope_per_s = 0.0;  // x in ms, slope reported per second
    double intercept = 0.0;
    double slope_sigma_per_s = 0.0;
    double intercept_sigma = 0.0;
};

/// Weighted linear regression of nbar versus delay (ms).
LinearFit fit_heating_rate(const ScanData& data);

/// Two-parameter fit of the rocking-mode occupations with all line parameters
/// held at `fixed`.
FitResult fit_kerr_occupations(const ScanData& data, const spectro::KerrSpectrumParams& fixed,
                               double guess_nbar_xr = 1.0, double guess_nbar_yr = 1.0);

/// Named models usable by fit_model and the CLI.
struct NamedModel {
    std::vector<std::string> param_names;
    ModelFn fn;
};

/// "freq_scan" (x: MHz), "time_scan" (x: us, gauge-fixed A >= 0 with phase in
/// (-pi, pi]), "heating" (x: ms).
NamedModel named_model(const std::string& name);

/// Apply per-model gauge fixing to a parameter vector (in place).
void gauge_fix(const std::string& model_name, Eigen::VectorXd& params);

} // namespace paracool::fitkit
