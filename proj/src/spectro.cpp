#include "paracool/spectro.hpp"

#include <cmath>

namespace paracool::spectro {

void FreqScanParams::validate() const {
    if (r0_khz < 0.0) throw Error("r0 must be non-negative");
    if (tau_us <= 0.0) throw Error("scan pulse duration must be positive");
}

double freq_scan_model(const FreqScanParams& p, double delta_mhz) {
    const double det_khz = (delta_mhz - p.delta_ws_mhz) * 1e3;
    const double r = std::hypot(p.r0_khz, det_khz);
    if (r == 0.0) return p.offset;  // r0 = 0 on resonance: no coupling, flat line
    const double s = std::sin(0.5 * phase_khz_us(r, p.tau_us));
    const double ratio = p.r0_khz / r;
    return p.amplitude * s * s * ratio * ratio + p.offset;
}

void TimeScanParams::validate() const {
    if (gamma_per_ms < 0.0) throw Error("decay rate must be non-negative");
}

double time_scan_model(const TimeScanParams& p, double tau_us) {
    const double ph = phase_khz_us(p.r0_khz, tau_us) + p.phase;
    return 0.5 * p.amplitude * std::sin(ph) * std::exp(-p.gamma_per_ms * tau_us * 1e-3) +
           p.offset;
}

namespace {

/// 4 g^2 sin^2(r t / 2) / r^2, the single-phonon transfer probability
double transfer_probability(const exchange::ExchangeParams& params, double t_us) {
    const double r = params.r_khz();
    if (r == 0.0) return 0.0;
    const double s = std::sin(0.5 * phase_khz_us(r, t_us));
    const double q = params.r0_khz() / r;
    return q * q * s * s;
}

const double kSin2PiSqrt3 = [] {
    const double s = std::sin(M_PI / std::sqrt(3.0));
    return s * s;
}();

} // namespace

std::pair<double, double> single_phonon_transfer(const exchange::ExchangeParams& params,
                                                 double t_us) {
    const double p01 = transfer_probability(params, t_us);
    return {1.0 - p01, p01};
}

double dark_count_correction(const exchange::ExchangeParams& params, double t_us,
                             WhichMode which) {
    const double p = transfer_probability(params, t_us);
    // d_w = (7 + 9 cos(2 pi/sqrt 3))/16 * p; d_s = (9 sin^2(pi/sqrt 3) - 8)/8 * (1 - p)
    if (which == WhichMode::W)
        return (7.0 + 9.0 * std::cos(2.0 * M_PI / std::sqrt(3.0))) / 16.0 * p;
    return (9.0 * kSin2PiSqrt3 - 8.0) / 8.0 * (1.0 - p);
}

double two_ion_dark_counts(const exchange::ExchangeParams& params, double t_us, WhichMode which,
                           bool exact) {
    const double p = transfer_probability(params, t_us);
    const double pre = 2.0 * (8.0 / 9.0) * (8.0 / 9.0);
    if (which == WhichMode::W) {
        const double base = pre * (1.0 - p);
        return exact ? base * (1.0 - dark_count_correction(params, t_us, WhichMode::W)) : base;
    }
    const double base = pre * p;
    return exact ? base * (1.0 + dark_count_correction(params, t_us, WhichMode::S)) : base;
}

void RabiParams::validate() const {
    if (carrier_khz <= 0.0) throw Error("carrier Rabi rate must be positive");
    if (eta <= 0.0) throw Error("Lamb-Dicke parameter must be positive");
}

double rsb_rabi_khz(int n, const RabiParams& p) {
    if (n < 0) throw Error("number state must be non-negative");
    p.validate();
    const double x = p.eta * p.eta;
    const double debye_waller = std::exp((p.exponent_negative ? -0.5 : 0.5) * x);
    return p.carrier_khz * debye_waller * p.eta * std::assoc_laguerre(n, 1, x) /
           std::sqrt(n + 1.0);
}

void KerrSpectrumParams::validate() const {
    rabi.validate();
    if (n_max_zs < 1 || n_max_xr < 1 || n_max_yr < 1) throw Error("truncations must be >= 1");
    if (nbar_zs < 0.0 || nbar_xr < 0.0 || nbar_yr < 0.0)
        throw Error("mean occupations must be non-negative");
}

namespace {

std::vector<double> thermal_weights(double nbar, int n_max, bool normalized) {
    std::vector<double> w(n_max + 1);
    const double q = nbar / (1.0 + nbar);
    double v = normalized ? 1.0 / (1.0 + nbar) : 1.0;
    for (int n = 0; n <= n_max; ++n) {
        w[n] = v;
        v *= q;
    }
    return w;
}

} // namespace

double KerrSpectrumParams::weight_coverage() const {
    auto sum = [&](double nbar, int n_max) {
        double s = 0.0;
        for (double w : thermal_weights(nbar, n_max, true)) s += w;
        return s;
    };
    return std::min({sum(nbar_zs, n_max_zs), sum(nbar_xr, n_max_xr), sum(nbar_yr, n_max_yr)});
}

double kerr_spectrum(const KerrSpectrumParams& p, double f_mhz) {
    p.validate();
    const auto wz = thermal_weights(p.nbar_zs, p.n_max_zs, p.normalized_weights);
    const auto wx = thermal_weights(p.nbar_xr, p.n_max_xr, p.normalized_weights);
    const auto wy = thermal_weights(p.nbar_yr, p.n_max_yr, p.normalized_weights);

    const double det0 = 2.0 * M_PI * (f_mhz - p.f_rsb_mhz) * 1e6;  // rad/s
    const double chix = 2.0 * M_PI * p.chi_zs_xr_hz;
    const double chiy = 2.0 * M_PI * p.chi_zs_yr_hz;

    double total = 0.0;
    for (int a = 0; a <= p.n_max_zs; ++a) {
        if (wz[a] == 0.0) continue;
        const double om0 = angular_from_khz(rsb_rabi_khz(a, p.rabi));
        for (int b = 0; b <= p.n_max_xr; ++b) {
            const double wab = wz[a] * wx[b];
            if (wab == 0.0) continue;
            for (int c = 0; c <= p.n_max_yr; ++c) {
                const double w = wab * wy[c];
                if (w == 0.0) continue;
                const double det = det0 - chix * b - chiy * c;
                const double om = std::hypot(om0, det);
                const double s = std::sin(0.5 * M_PI * om / om0);
                total += w * p.amplitude * (om0 * om0) * s * s / (om * om);
            }
        }
    }
    return total + p.offset;
}

double bessel_suppression(double delta_k_per_m, double beta_nm_per_khz, double r0_khz) {
    if (delta_k_per_m < 0.0 || beta_nm_per_khz < 0.0)
        throw Error("wavevector and driven-motion slope must be non-negative");
    const double idx = delta_k_per_m * beta_nm_per_khz * 1e-9 * r0_khz;
    return std::abs(std::cyl_bessel_j(0.0, std::abs(idx)));
}

void DetectionCalibration::validate() const {
    if (!(counts_two_bright > counts_zero_bright) || counts_zero_bright < 0.0)
        throw Error("detection calibration needs C2 > C0 >= 0");
}

DarkCount dark_from_counts(double counts, const DetectionCalibration& cal) {
    cal.validate();
    const double raw = 2.0 * (cal.counts_two_bright - counts) /
                       (cal.counts_two_bright - cal.counts_zero_bright);
    DarkCount out;
    out.dark = std::clamp(raw, 0.0, 2.0);
    out.clamped = raw != out.dark;
    return out;
}

} // namespace paracool::spectro
