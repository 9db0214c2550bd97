#pragma once

#include <utility>
#include <vector>

#include "paracool/exchange.hpp"

namespace paracool::spectro {

/// c(delta) = A sin^2(r tau/2) / (r/r0)^2 + P0, r = sqrt(r0^2 + (delta-dws)^2)
struct FreqScanParams {
    double amplitude = 0.0;      // A
    double r0_khz = 0.0;
    double tau_us = 0.0;
    double delta_ws_mhz = 0.0;
    double offset = 0.0;         // P0

    void validate() const;
};

double freq_scan_model(const FreqScanParams& p, double delta_mhz);

/// c(tau) = A sin(r0 tau + phi) exp(-gamma tau) / 2 + y0
struct TimeScanParams {
    double amplitude = 0.0;      // A
    double r0_khz = 0.0;
    double phase = 0.0;          // rad
    double gamma_per_ms = 0.0;
    double offset = 0.0;         // y0

    void validate() const;
};

double time_scan_model(const TimeScanParams& p, double tau_us);

/// (p10, p01) for |1,0> under the coupling; p10 + p01 = 1 exactly.
std::pair<double, double> single_phonon_transfer(const exchange::ExchangeParams& params,
                                                 double t_us);

enum class WhichMode { W, S };

/// Correction factors of the exact two-ion dark-count forms; both bounded by
/// |7 + 9 cos(2 pi/sqrt 3)|/16 ~ 0.059.
double dark_count_correction(const exchange::ExchangeParams& params, double t_us,
                             WhichMode which);

/// Average dark-ion number after the two-ion prepare/exchange/analyze
/// sequence. exact=false drops the ~6% correction factors.
double two_ion_dark_counts(const exchange::ExchangeParams& params, double t_us, WhichMode which,
                           bool exact);

struct RabiParams {
    double carrier_khz = 0.0;     // Omega
    double eta = 0.268;           // Lamb-Dicke parameter
    /// matrix-element convention exp(-eta^2/2); flip to reproduce the
    /// exp(+eta^2/2) variant
    bool exponent_negative = true;

    void validate() const;
};

/// First red-sideband rate Omega e^{-eta^2/2} eta L^1_n(eta^2)/sqrt(n+1), kHz.
double rsb_rabi_khz(int n, const RabiParams& p);

struct KerrSpectrumParams {
    double amplitude = 1.0;       // B
    double f_rsb_mhz = 0.0;
    double offset = 0.0;          // D0
    double chi_zs_xr_hz = 0.0;    // ordinary Hz (chi/2pi)
    double chi_zs_yr_hz = 0.0;
    double nbar_zs = 0.0;
    double nbar_xr = 0.0;
    double nbar_yr = 0.0;
    int n_max_zs = 5;
    int n_max_xr = 20;
    int n_max_yr = 20;
    RabiParams rabi;
    /// thermal weights carry the 1/(1+nbar) normalization; flip to use the
    /// bare (nbar/(1+nbar))^n weights
    bool normalized_weights = true;

    void validate() const;
    /// fraction of thermal weight captured by the truncations
    double weight_coverage() const;
};

/// Thermally averaged sideband excitation with cross-Kerr shifts from the two
/// rocking modes.
double kerr_spectrum(const KerrSpectrumParams& p, double f_mhz);

/// |J0(dk beta r0)|
double bessel_suppression(double delta_k_per_m, double beta_nm_per_khz, double r0_khz);

struct DetectionCalibration {
    double counts_two_bright = 0.0;   // C2
    double counts_zero_bright = 0.0;  // C0

    void validate() const;
};

struct DarkCount {
    double dark = 0.0;  // clamped to [0, 2]
    bool clamped = false;
};

/// D = 2 (C2 - C)/(C2 - C0)
DarkCount dark_from_counts(double counts, const DetectionCalibration& cal);

} // namespace paracool::spectro
