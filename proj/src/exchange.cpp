#include "paracool/exchange.hpp"

#include <cmath>

#include "paracool/ode.hpp"

namespace paracool::exchange {

double swap_time_us(double g_khz, int k) {
    if (g_khz <= 0.0) throw ZeroCoupling("swap time undefined for g <= 0");
    if (k < 1 || k % 2 == 0) throw Error("swap index k must be an odd positive integer");
    const double g_rad_per_us = angular_from_khz(g_khz) * 1e-6;
    return k * M_PI / (2.0 * g_rad_per_us);
}

TwoModeFockState TwoModeFockState::fock(int m, int n, int n_max) {
    return fock(m, n, n_max, n_max);
}

TwoModeFockState TwoModeFockState::fock(int m, int n, int n_max_w, int n_max_s) {
    if (m < 0 || n < 0 || m > n_max_w || n > n_max_s)
        throw Error("fock occupation outside truncation");
    TwoModeFockState s;
    s.amp = Eigen::MatrixXcd::Zero(n_max_w + 1, n_max_s + 1);
    s.amp(m, n) = 1.0;
    return s;
}

double TwoModeFockState::top_level_population() const {
    double p = 0.0;
    const int mw = n_max_w(), ms = n_max_s();
    for (int n = 0; n <= ms; ++n) p += std::norm(amp(mw, n));
    for (int m = 0; m < mw; ++m) p += std::norm(amp(m, ms));
    return p;
}

double TwoModeFockState::mean_n_w() const {
    double v = 0.0;
    for (int m = 0; m <= n_max_w(); ++m)
        for (int n = 0; n <= n_max_s(); ++n) v += m * std::norm(amp(m, n));
    return v;
}

double TwoModeFockState::mean_n_s() const {
    double v = 0.0;
    for (int m = 0; m <= n_max_w(); ++m)
        for (int n = 0; n <= n_max_s(); ++n) v += n * std::norm(amp(m, n));
    return v;
}

Eigen::VectorXd TwoModeFockState::marginal_w() const {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(n_max_w() + 1);
    for (int m = 0; m <= n_max_w(); ++m)
        for (int n = 0; n <= n_max_s(); ++n) p(m) += std::norm(amp(m, n));
    return p;
}

Eigen::VectorXd TwoModeFockState::marginal_s() const {
    Eigen::VectorXd p = Eigen::VectorXd::Zero(n_max_s() + 1);
    for (int m = 0; m <= n_max_w(); ++m)
        for (int n = 0; n <= n_max_s(); ++n) p(n) += std::norm(amp(m, n));
    return p;
}

TwoModeFockState propagate_fock(const TwoModeFockState& state, const ExchangeParams& params,
                                const std::function<double(double)>& envelope,
                                double duration_us, double rtol) {
    if (duration_us < 0.0) throw Error("negative propagation duration");
    const int rows = static_cast<int>(state.amp.rows());
    const int cols = static_cast<int>(state.amp.cols());
    const double g = angular_from_khz(params.g_khz) * 1e-6;       // rad/us
    const double det = angular_from_khz(params.detuning_khz) * 1e-6;
    const double phi = params.drive_phase;

    Eigen::MatrixXd sq(rows + 1, cols + 1);
    for (int m = 0; m <= rows; ++m)
        for (int n = 0; n <= cols; ++n) sq(m, n) = std::sqrt(double(m) * double(n));

    auto rhs = [&](double t, const Eigen::MatrixXcd& c) {
        const std::complex<double> up = g * envelope(t) *
                                        std::exp(std::complex<double>(0.0, det * t + phi));
        const std::complex<double> dn = std::conj(up);
        Eigen::MatrixXcd d = Eigen::MatrixXcd::Zero(rows, cols);
        for (int m = 0; m < rows; ++m) {
            for (int n = 0; n < cols; ++n) {
                std::complex<double> acc = 0.0;
                if (m > 0 && n + 1 < cols) acc += up * sq(m, n + 1) * c(m - 1, n + 1);
                if (n > 0 && m + 1 < rows) acc += dn * sq(m + 1, n) * c(m + 1, n - 1);
                d(m, n) = std::complex<double>(0.0, -1.0) * acc;
            }
        }
        return d;
    };

    TwoModeFockState out = state;
    if (params.g_khz != 0.0 && duration_us > 0.0)
        out.amp = ode::integrate(state.amp, 0.0, duration_us, rhs, rtol, 1e-14);
    if (out.top_level_population() > kLeakGuard)
        throw TruncationLeak("population reached the Fock truncation boundary");
    return out;
}

TwoModeFockState propagate_fock(const TwoModeFockState& state, const ExchangeParams& params,
                                double duration_us, double rtol) {
    return propagate_fock(state, params, [](double) { return 1.0; }, duration_us, rtol);
}

TwoModeFockState propagate_fock(const TwoModeFockState& state, const ExchangeParams& params,
                                const fields::PulseEnvelope& envelope, double duration_us,
                                double rtol) {
    if (duration_us > envelope.total_us() + 1e-9)
        throw OutOfRange("pulse duration exceeds the envelope window");
    return propagate_fock(
        state, params, [&envelope](double t) { return fields::envelope_value(envelope, t); },
        duration_us, rtol);
}

void MomentState::validate() const {
    if (nbar_w < 0.0 || nbar_s < 0.0) throw Error("negative mean occupation");
    if (std::norm(cross) > nbar_w * nbar_s + 1e-12)
        throw Error("moment state violates Cauchy-Schwarz");
}

MomentState moment_exchange(const MomentState& state, const ExchangeParams& params,
                            double duration_us) {
    state.validate();
    const double g = angular_from_khz(params.g_khz) * 1e-6;  // rad/us
    const double det = angular_from_khz(params.detuning_khz) * 1e-6;
    const double phi = params.drive_phase;

    auto rhs = [&](double t, const Eigen::Vector4d& y) {
        const double th = det * t + phi;
        const double c = std::cos(th), s = std::sin(th);
        const double imx = c * y(3) + s * y(2);  // Im(e^{i th} X)
        Eigen::Vector4d d;
        d(0) = 2.0 * g * imx;
        d(1) = -2.0 * g * imx;
        d(2) = g * (y(1) - y(0)) * s;
        d(3) = g * (y(1) - y(0)) * c;
        return d;
    };

    Eigen::Vector4d y(state.nbar_w, state.nbar_s, state.cross.real(), state.cross.imag());
    if (params.g_khz != 0.0 && duration_us > 0.0)
        y = ode::integrate(y, 0.0, duration_us, rhs, 1e-11, 1e-14);
    MomentState out;
    out.nbar_w = y(0);
    out.nbar_s = y(1);
    out.cross = {y(2), y(3)};
    return out;
}

} // namespace paracool::exchange
