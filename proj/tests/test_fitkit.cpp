#include <doctest.h>

#include <random>

#include "paracool/fitkit.hpp"

using namespace paracool;
using namespace paracool::fitkit;

TEST_SUITE_BEGIN("fitkit");

namespace {

struct Synth {
    ScanData data;
    Eigen::VectorXd truth;
};

Eigen::VectorXd gaussian_vector(std::mt19937_64& rng, int n, double sigma) {
    std::normal_distribution<double> dist(0.0, sigma);
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = dist(rng);
    return v;
}

Synth synth_freq_scan(const Eigen::VectorXd& truth, double noise, std::uint64_t seed) {
    const auto model = named_model("freq_scan");
    Synth s;
    s.truth = truth;
    const double dws = truth(3);
    const int n = 61;
    s.data.x.resize(n);
    s.data.y.resize(n);
    s.data.sigma = Eigen::VectorXd::Constant(n, noise > 0 ? noise : 0.02);
    std::mt19937_64 rng(seed);
    for (int i = 0; i < n; ++i) {
        s.data.x(i) = dws - 0.040 + 0.080 * i / (n - 1);
        s.data.y(i) = model.fn(s.data.x(i), truth);
    }
    if (noise > 0) s.data.y += gaussian_vector(rng, n, noise);
    return s;
}

Synth synth_time_scan(const Eigen::VectorXd& truth, double noise, std::uint64_t seed) {
    const auto model = named_model("time_scan");
    Synth s;
    s.truth = truth;
    const int n = 61;
    s.data.x.resize(n);
    s.data.y.resize(n);
    s.data.sigma = Eigen::VectorXd::Constant(n, noise > 0 ? noise : 0.02);
    std::mt19937_64 rng(seed);
    for (int i = 0; i < n; ++i) {
        s.data.x(i) = 300.0 * i / (n - 1);
        s.data.y(i) = model.fn(s.data.x(i), truth);
    }
    if (noise > 0) s.data.y += gaussian_vector(rng, n, noise);
    return s;
}

} // namespace

TEST_CASE("fit model: noiseless freq-scan data is recovered exactly") {
    Eigen::VectorXd truth(5);
    truth << -0.79, 5.2, 101.0, 0.7116, 0.944;
    const auto s = synth_freq_scan(truth, 0.0, 1);
    const auto model = named_model("freq_scan");
    Eigen::VectorXd guess(5);
    guess << -0.7, 4.5, 95.0, 0.712, 0.9;
    const auto res = fit_model(s.data, model.fn, model.param_names, guess);
    CHECK(res.converged);
    CHECK(res.chi2_reduced < 1e-12);
    for (int i = 0; i < 5; ++i)
        CHECK(res.params(i) == doctest::Approx(truth(i)).epsilon(1e-8));
}

TEST_CASE("fit model: noisy freq-scan recovery is covered by the reported intervals") {
    Eigen::VectorXd truth(5);
    truth << -0.79, 5.2, 101.0, 0.7116, 0.944;
    const auto model = named_model("freq_scan");
    int hits = 0;
    const int trials = 40;
    for (int k = 0; k < trials; ++k) {
        const auto s = synth_freq_scan(truth, 0.02, 1000 + k);
        const auto res = fit_model(s.data, model.fn, model.param_names, truth);
        bool ok = res.converged;
        for (int i = 0; i < 5 && ok; ++i)
            ok = std::abs(res.params(i) - truth(i)) <= 3.0 * res.confidence_68(i);
        hits += ok;
    }
    CHECK(hits >= trials * 9 / 10);
}

TEST_CASE("fit model: Table III zs-yr synthetic time scan recovers r0 within 1%") {
    Eigen::VectorXd truth(5);
    truth << 1.34, 7.91, 1.66, 1.0 / 2.6, 0.69;
    const auto s = synth_time_scan(truth, 0.02, 42);
    const auto model = named_model("time_scan");
    Eigen::VectorXd guess(5);
    guess << 1.2, 7.0, 1.4, 0.5, 0.6;
    const auto res = fit_model(s.data, model.fn, model.param_names, guess);
    CHECK(res.converged);
    CHECK(res.params(1) == doctest::Approx(7.91).epsilon(0.01));
}

TEST_CASE("fit model: time-scan gauge fixing keeps A positive with wrapped phase") {
    Eigen::VectorXd p(5);
    p << -1.2, 8.0, 0.4, 0.1, 0.5;
    gauge_fix("time_scan", p);
    CHECK(p(0) == 1.2);
    CHECK(p(2) == doctest::Approx(0.4 + M_PI - 2 * M_PI).epsilon(1e-12));
    CHECK(p(2) > -M_PI);
    CHECK(p(2) <= M_PI);
}

TEST_CASE("fit model: confidence widths scale as 1/sqrt(points) on replicated data") {
    Eigen::VectorXd truth(2);
    truth << 330.0, 0.1;
    const auto model = named_model("heating");
    auto make = [&](int reps) {
        ScanData d;
        const int base = 7;
        d.x.resize(base * reps);
        d.y.resize(base * reps);
        d.sigma = Eigen::VectorXd::Constant(base * reps, 0.05);
        for (int r = 0; r < reps; ++r)
            for (int i = 0; i < base; ++i) {
                d.x(r * base + i) = i * 0.5;  // ms
                d.y(r * base + i) = model.fn(d.x(r * base + i), truth);
            }
        return d;
    };
    const auto r1 = fit_model(make(1), model.fn, model.param_names, truth);
    const auto r4 = fit_model(make(4), model.fn, model.param_names, truth);
    CHECK(r1.confidence_68(0) / r4.confidence_68(0) == doctest::Approx(2.0).epsilon(0.02));
}

TEST_CASE("fit model: scan data validation") {
    ScanData d;
    d.x = Eigen::VectorXd::LinSpaced(4, 0.0, 3.0);
    d.y = Eigen::VectorXd::Zero(4);
    d.sigma = Eigen::VectorXd::Constant(4, 1.0);
    CHECK_THROWS_AS(d.validate(5), Error);
    d.sigma(2) = 0.0;
    CHECK_THROWS_AS(d.validate(2), Error);
}

TEST_CASE("nbar from sidebands: endpoints, formula, and round trip") {
    CHECK(nbar_from_sidebands(0.0, 0.5) == 0.0);
    CHECK(nbar_from_sidebands(0.25, 0.5) == doctest::Approx(1.0).epsilon(1e-12));
    for (double nb : {0.03, 0.4, 2.7}) {
        const double ratio = nb / (1.0 + nb);
        CHECK(nbar_from_sidebands(0.9 * ratio, 0.9) == doctest::Approx(nb).epsilon(1e-12));
    }
    CHECK_THROWS_AS(nbar_from_sidebands(0.6, 0.5), RatioOutOfRange);
}

TEST_CASE("heating-rate fit: constant, exact line, and noisy recovery") {
    ScanData d;
    d.x = Eigen::VectorXd::LinSpaced(9, 0.0, 4.0);  // ms
    d.y = Eigen::VectorXd::Constant(9, 0.37);
    d.sigma = Eigen::VectorXd::Constant(9, 0.02);
    CHECK(fit_heating_rate(d).slope_per_s == doctest::Approx(0.0).epsilon(1e-12));

    for (int i = 0; i < 9; ++i) d.y(i) = 0.11 + 330.0 * d.x(i) * 1e-3;
    const auto fit = fit_heating_rate(d);
    CHECK(fit.slope_per_s == doctest::Approx(330.0).epsilon(1e-10));
    CHECK(fit.intercept == doctest::Approx(0.11).epsilon(1e-10));

    std::mt19937_64 rng(7);
    struct Case {
        double slope, span_ms, sigma;
    };
    for (const Case c : {Case{5.0, 40.0, 0.01}, Case{330.0, 4.0, 0.05}, Case{20.0, 20.0, 0.02}}) {
        int ok = 0;
        const int pts = 41;
        for (int trial = 0; trial < 25; ++trial) {
            ScanData n;
            n.x = Eigen::VectorXd::LinSpaced(pts, 0.0, c.span_ms);
            n.sigma = Eigen::VectorXd::Constant(pts, c.sigma);
            n.y.resize(pts);
            for (int i = 0; i < pts; ++i) n.y(i) = 0.1 + c.slope * n.x(i) * 1e-3;
            n.y += gaussian_vector(rng, pts, c.sigma);
            const auto f = fit_heating_rate(n);
            if (std::abs(f.slope_per_s - c.slope) <= 0.1 * c.slope) ++ok;
        }
        CHECK(ok >= 24);
    }
}

TEST_CASE("heating-rate fit: degenerate abscissa raises") {
    ScanData d;
    d.x = Eigen::VectorXd::Constant(5, 1.0);
    d.y = Eigen::VectorXd::Zero(5);
    d.sigma = Eigen::VectorXd::Constant(5, 0.1);
    CHECK_THROWS_AS(fit_heating_rate(d), DegenerateAbscissa);
}

namespace {

spectro::KerrSpectrumParams kerr_line() {
    spectro::KerrSpectrumParams p;
    p.amplitude = 1.78;
    p.f_rsb_mhz = 1201.2124;
    p.offset = 0.05;
    p.chi_zs_xr_hz = 75.86;
    p.chi_zs_yr_hz = 95.4;
    p.nbar_zs = 0.05;
    p.rabi.carrier_khz = 0.86;
    return p;
}

ScanData kerr_scan(const spectro::KerrSpectrumParams& p) {
    ScanData d;
    const int n = 141;
    d.x.resize(n);
    d.y.resize(n);
    d.sigma = Eigen::VectorXd::Constant(n, 0.02);
    for (int i = 0; i < n; ++i) {
        d.x(i) = p.f_rsb_mhz + (-1200.0 + 2800.0 * i / (n - 1)) * 1e-6;
        d.y(i) = spectro::kerr_spectrum(p, d.x(i));
    }
    return d;
}

} // namespace

TEST_CASE("kerr occupation fit: noiseless recovery of the reported occupations") {
    auto truth = kerr_line();
    truth.nbar_xr = 2.4;
    truth.nbar_yr = 1.8;
    const auto data = kerr_scan(truth);
    auto fixed = kerr_line();
    const auto res = fit_kerr_occupations(data, fixed, 1.0, 1.0);
    CHECK(res.converged);
    CHECK(res.params(0) == doctest::Approx(2.4).epsilon(1e-3));
    CHECK(res.params(1) == doctest::Approx(1.8).epsilon(1e-3));
}

TEST_CASE("kerr occupation fit: ground-state data pins the boundary") {
    const auto data = kerr_scan(kerr_line());
    const auto res = fit_kerr_occupations(data, kerr_line(), 0.5, 0.5);
    CHECK(res.params(0) == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(res.params(1) == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("fitted resonance is insensitive to the dark-count correction terms") {
    // generate two-ion frequency-scan data from the exact and approximate
    // models; the recovered resonance must agree far inside a linewidth
    const double g = 2.6, tau = 101.0, dws = 0.7116;
    auto make = [&](bool exact) {
        ScanData d;
        const int n = 81;
        d.x.resize(n);
        d.y.resize(n);
        d.sigma = Eigen::VectorXd::Constant(n, 0.02);
        for (int i = 0; i < n; ++i) {
            d.x(i) = dws - 0.030 + 0.060 * i / (n - 1);
            exchange::ExchangeParams p{g, (d.x(i) - dws) * 1e3, 0.0};
            d.y(i) = spectro::two_ion_dark_counts(p, tau, spectro::WhichMode::S, exact);
        }
        return d;
    };
    const auto model = named_model("freq_scan");
    Eigen::VectorXd guess(5);
    guess << 1.5, 2.0 * g, tau, dws + 0.002, 0.0;
    const auto fe = fit_model(make(true), model.fn, model.param_names, guess);
    const auto fa = fit_model(make(false), model.fn, model.param_names, guess);
    const double linewidth_mhz = 2.0 * g * 1e-3;
    CHECK(std::abs(fe.params(3) - fa.params(3)) < 1e-3 * linewidth_mhz);
    CHECK(std::abs(fe.params(3) - dws) < 1e-3 * linewidth_mhz);
}

TEST_SUITE_END();
