#pragma once

#include <Eigen/Dense>
#include <complex>
#include <functional>

#include "paracool/constants.hpp"
#include "paracool/errors.hpp"
#include "paracool/fields.hpp"

namespace paracool::exchange {

/// Beam-splitter drive parameters. Rates are ordinary (cycles) kHz, matching
/// the r0/2pi convention of scan fits; r0 = 2 g.
struct ExchangeParams {
    double g_khz = 0.0;
    double detuning_khz = 0.0;  // delta - delta_ws
    double drive_phase = 0.0;   // rad

    double r0_khz() const { return 2.0 * g_khz; }
    double r_khz() const { return std::hypot(r0_khz(), detuning_khz); }
};

/// k-th swap time in us, k odd: tau_k = k pi / (2 g) with angular g.
double swap_time_us(double g_khz, int k = 1);

/// Truncated two-mode number-basis state; amp(m, n) = c_mn for |m>_w |n>_s.
struct TwoModeFockState {
    Eigen::MatrixXcd amp;

    static TwoModeFockState fock(int m, int n, int n_max = 10);
    static TwoModeFockState fock(int m, int n, int n_max_w, int n_max_s);

    int n_max_w() const { return static_cast<int>(amp.rows()) - 1; }
    int n_max_s() const { return static_cast<int>(amp.cols()) - 1; }
    double norm() const { return amp.norm(); }
    /// total population with m = n_max_w or n = n_max_s
    double top_level_population() const;
    double population(int m, int n) const { return std::norm(amp(m, n)); }
    double mean_n_w() const;
    double mean_n_s() const;
    /// populations of the w (s) mode marginal
    Eigen::VectorXd marginal_w() const;
    Eigen::VectorXd marginal_s() const;
};

constexpr double kLeakGuard = 1e-8;

/// Integrates the interaction-frame amplitude equations
///   i c'_mn = g(t) [ e^{i(dt+phi)} sqrt(m(n+1)) c_{m-1,n+1}
///                  + e^{-i(dt+phi)} sqrt((m+1)n) c_{m+1,n-1} ]
/// with g(t) = g * envelope(t). Norm is preserved to the integrator tolerance;
/// TruncationLeak if top-level population exceeds the guard.
TwoModeFockState propagate_fock(const TwoModeFockState& state, const ExchangeParams& params,
                                const std::function<double(double)>& envelope,
                                double duration_us, double rtol = 1e-11);

/// Square pulse.
TwoModeFockState propagate_fock(const TwoModeFockState& state, const ExchangeParams& params,
                                double duration_us, double rtol = 1e-11);

/// Shaped pulse over the full envelope window.
TwoModeFockState propagate_fock(const TwoModeFockState& state, const ExchangeParams& params,
                                const fields::PulseEnvelope& envelope, double duration_us,
                                double rtol = 1e-11);

/// Gaussian-sector first moments for thermal states.
struct MomentState {
    double nbar_w = 0.0;
    double nbar_s = 0.0;
    std::complex<double> cross = 0.0;  // <w^dag s>

    void validate() const;
};

/// Closed linear dynamics of (nbar_w, nbar_s, <w^dag s>) under the coupling.
MomentState moment_exchange(const MomentState& state, const ExchangeParams& params,
                            double duration_us);

} // namespace paracool::exchange
