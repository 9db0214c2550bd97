#include <doctest.h>

#include <complex>
#include <random>

#include "oracles.hpp"
#include "paracool/exchange.hpp"

using namespace paracool;
using namespace paracool::exchange;

TEST_SUITE_BEGIN("exchange");

namespace {

double rad_per_us(double f_khz) { return 2.0 * M_PI * f_khz * 1e-3; }

/// Appendix-style closed forms for the one- and two-phonon manifolds,
/// evaluated directly from the coupled amplitude solutions.
struct TwoLevelClosed {
    double p10, p01;
};

TwoLevelClosed closed_single(const ExchangeParams& p, double t_us) {
    const double g = rad_per_us(p.g_khz), d = rad_per_us(p.detuning_khz);
    const double r = std::sqrt(4.0 * g * g + d * d);
    if (r == 0.0) return {1.0, 0.0};
    const double s = std::sin(0.5 * r * t_us);
    const double p01 = 4.0 * g * g * s * s / (r * r);
    return {1.0 - p01, p01};
}

struct ThreeLevelClosed {
    double p20, p11, p02;
};

ThreeLevelClosed closed_double(const ExchangeParams& p, double t_us) {
    const double g = rad_per_us(p.g_khz), d = rad_per_us(p.detuning_khz);
    const double r = std::sqrt(4.0 * g * g + d * d);
    const double c = std::cos(r * t_us), s = std::sin(r * t_us);
    const std::complex<double> i(0.0, 1.0);
    const std::complex<double> c02 = 2.0 * g * g * (c - 1.0) / (r * r);
    const std::complex<double> c11 =
        std::sqrt(2.0) * g * (d * (1.0 - c) - i * r * s) / (r * r);
    const std::complex<double> c20 =
        (2.0 * g * g + (2.0 * g * g + d * d) * c + i * d * r * s) / (r * r);
    return {std::norm(c20), std::norm(c11), std::norm(c02)};
}

} // namespace

TEST_CASE("swap time: r0/2pi = 7.91 kHz gives a 63.2 us single swap") {
    const double g = 7.91 / 2.0;
    CHECK(swap_time_us(g) == doctest::Approx(63.2).epsilon(0.002));
    CHECK(swap_time_us(2.0 * g) == doctest::Approx(0.5 * swap_time_us(g)).epsilon(1e-12));
    CHECK(swap_time_us(g, 3) == doctest::Approx(3.0 * swap_time_us(g)).epsilon(1e-12));
}

TEST_CASE("swap time: zero coupling and even k are rejected") {
    CHECK_THROWS_AS(swap_time_us(0.0), ZeroCoupling);
    CHECK_THROWS_AS(swap_time_us(-1.0), ZeroCoupling);
    CHECK_THROWS_AS(swap_time_us(1.0, 2), Error);
}

TEST_CASE("fock propagation: resonant square pulse swaps |1,0> exactly") {
    ExchangeParams p{3.955, 0.0, 0.0};
    const double tau = swap_time_us(p.g_khz);
    const auto out = propagate_fock(TwoModeFockState::fock(1, 0), p, tau);
    CHECK(out.population(0, 1) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(out.population(1, 0) < 1e-8);
    CHECK(std::abs(out.norm() - 1.0) < 1e-9);
}

TEST_CASE("fock propagation: detuned transfer follows the closed form") {
    ExchangeParams p{2.2, 5.7, 0.0};
    for (double t : {11.0, 37.0, 80.0, 133.0}) {
        const auto out = propagate_fock(TwoModeFockState::fock(1, 0), p, t);
        const auto cf = closed_single(p, t);
        CHECK(std::abs(out.population(0, 1) - cf.p01) < 1e-6);
        CHECK(std::abs(out.population(1, 0) - cf.p10) < 1e-6);
    }
    // maximum transfer probability is r0^2 / r^2
    const double peak = p.r0_khz() * p.r0_khz() / (p.r_khz() * p.r_khz());
    double best = 0.0;
    for (double t = 0.0; t < 200.0; t += 0.25)
        best = std::max(best, closed_single(p, t).p01);
    CHECK(best == doctest::Approx(peak).epsilon(1e-4));
}

TEST_CASE("fock propagation: two-phonon manifold matches the three-level solution") {
    std::mt19937 rng(8080);
    std::uniform_real_distribution<double> gd(0.5, 6.0), dd(-12.0, 12.0), td(5.0, 120.0);
    for (int trial = 0; trial < 12; ++trial) {
        ExchangeParams p{gd(rng), dd(rng), 0.0};
        const double t = td(rng);
        const auto out = propagate_fock(TwoModeFockState::fock(2, 0, 6), p, t);
        const auto cf = closed_double(p, t);
        CHECK(std::abs(out.population(2, 0) - cf.p20) < 1e-6);
        CHECK(std::abs(out.population(1, 1) - cf.p11) < 1e-6);
        CHECK(std::abs(out.population(0, 2) - cf.p02) < 1e-6);
    }
}

TEST_CASE("fock propagation property: norm and total quanta preserved") {
    std::mt19937 rng(5511);
    std::uniform_real_distribution<double> gd(0.5, 8.0), dd(-15.0, 15.0), td(10.0, 150.0);
    for (int trial = 0; trial < 8; ++trial) {
        ExchangeParams p{gd(rng), dd(rng), 0.4};
        TwoModeFockState st = TwoModeFockState::fock(0, 0, 8);
        st.amp.setZero();
        st.amp(1, 0) = std::sqrt(0.3);
        st.amp(0, 2) = std::sqrt(0.2);
        st.amp(2, 1) = std::sqrt(0.5);
        const double n0 = st.mean_n_w() + st.mean_n_s();
        const auto out = propagate_fock(st, p, td(rng));
        CHECK(std::abs(out.norm() - 1.0) < 1e-9);
        CHECK(std::abs(out.mean_n_w() + out.mean_n_s() - n0) < 1e-9);
    }
}

TEST_CASE("fock propagation property: double swap restores the populations") {
    ExchangeParams p{1.7, 0.0, 0.0};
    TwoModeFockState st = TwoModeFockState::fock(0, 0, 7);
    st.amp.setZero();
    st.amp(2, 0) = std::sqrt(0.6);
    st.amp(0, 1) = std::sqrt(0.4);
    const auto out = propagate_fock(st, p, 2.0 * swap_time_us(p.g_khz));
    CHECK(std::abs(out.population(2, 0) - 0.6) < 1e-8);
    CHECK(std::abs(out.population(0, 1) - 0.4) < 1e-8);
}

TEST_CASE("fock propagation property: transfer is even in the detuning") {
    for (double d : {3.0, 8.5}) {
        ExchangeParams plus{2.5, d, 0.0};
        ExchangeParams minus{2.5, -d, 0.0};
        const auto a = propagate_fock(TwoModeFockState::fock(1, 0), plus, 71.0);
        const auto b = propagate_fock(TwoModeFockState::fock(1, 0), minus, 71.0);
        CHECK(std::abs(a.population(0, 1) - b.population(0, 1)) < 1e-9);
    }
}

TEST_CASE("fock propagation: shaped pulse with matched area reproduces the square pulse") {
    ExchangeParams p{3.955, 0.0, 0.0};
    const double tau = swap_time_us(p.g_khz);  // 63.2 us
    fields::PulseEnvelope env;
    env.flat_time_us = tau - env.ramp_time_us;  // area = ramp + flat = tau

    TwoModeFockState st = TwoModeFockState::fock(0, 0, 6);
    st.amp.setZero();
    st.amp(1, 0) = std::sqrt(0.7);
    st.amp(0, 2) = std::sqrt(0.3);
    const auto square = propagate_fock(st, p, tau);
    const auto shaped = propagate_fock(st, p, env, env.total_us());
    for (int m = 0; m < 6; ++m)
        for (int n = 0; n < 6; ++n)
            CHECK(std::abs(square.population(m, n) - shaped.population(m, n)) < 1e-6);
}

TEST_CASE("fock propagation: truncation leak is detected") {
    ExchangeParams p{3.0, 0.0, 0.0};
    CHECK_THROWS_AS(propagate_fock(TwoModeFockState::fock(0, 1, 1), p, 10.0), TruncationLeak);
}

TEST_CASE("moment exchange: vacuum stays vacuum and a resonant swap exchanges occupations") {
    ExchangeParams p{2.0, 0.0, 0.0};
    MomentState vac;
    const auto still = moment_exchange(vac, p, 33.0);
    CHECK(still.nbar_w == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(still.nbar_s == doctest::Approx(0.0).epsilon(1e-12));

    MomentState th{1.7, 0.2, 0.0};
    const auto swapped = moment_exchange(th, p, swap_time_us(p.g_khz));
    CHECK(swapped.nbar_w == doctest::Approx(0.2).epsilon(1e-8));
    CHECK(swapped.nbar_s == doctest::Approx(1.7).epsilon(1e-8));
}

TEST_CASE("moment exchange: agrees with the thermal Fock-mixture oracle") {
    std::mt19937 rng(31337);
    std::uniform_real_distribution<double> nw(0.1, 0.9), ns(0.05, 0.5), dd(-6.0, 6.0);
    for (int trial = 0; trial < 3; ++trial) {
        const double nbar_w = nw(rng), nbar_s = ns(rng);
        ExchangeParams p{1.9, dd(rng), 0.0};
        const double t = 47.0;

        double mix_w = 0.0, mix_s = 0.0, weight = 0.0;
        const int n_max = 30;
        for (int m = 0; m <= n_max; ++m) {
            const double pm = std::pow(nbar_w / (1 + nbar_w), m) / (1 + nbar_w);
            for (int n = 0; n <= n_max; ++n) {
                const double pn = std::pow(nbar_s / (1 + nbar_s), n) / (1 + nbar_s);
                const double w = pm * pn;
                if (w < 1e-9) continue;
                const auto out =
                    propagate_fock(TwoModeFockState::fock(m, n, m + n + 2), p, t, 1e-10);
                mix_w += w * out.mean_n_w();
                mix_s += w * out.mean_n_s();
                weight += w;
            }
        }
        REQUIRE(weight > 1.0 - 1e-5);

        const auto mom = moment_exchange({nbar_w, nbar_s, 0.0}, p, t);
        CHECK(std::abs(mom.nbar_w - mix_w) < 1e-4);
        CHECK(std::abs(mom.nbar_s - mix_s) < 1e-4);
    }
}

TEST_CASE("moment exchange property: Cauchy-Schwarz and total quanta at resonance") {
    ExchangeParams p{2.7, 0.0, 0.0};
    MomentState st{0.9, 0.1, 0.0};
    for (double t : {7.0, 19.0, 44.0, 90.0}) {
        const auto out = moment_exchange(st, p, t);
        CHECK(std::norm(out.cross) <= out.nbar_w * out.nbar_s + 1e-10);
        CHECK(out.nbar_w + out.nbar_s == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("moment state: Cauchy-Schwarz violations are rejected") {
    MomentState bad{0.1, 0.1, std::complex<double>(0.5, 0.0)};
    CHECK_THROWS_AS(bad.validate(), Error);
    MomentState neg{-0.1, 0.0, 0.0};
    CHECK_THROWS_AS(neg.validate(), Error);
    MomentState ok{0.25, 0.25, std::complex<double>(0.2, 0.1)};
    CHECK_NOTHROW(ok.validate());
}

TEST_CASE("exchange params: generalized rate dominates the resonant rate") {
    ExchangeParams p{3.0, 4.0, 0.0};
    CHECK(p.r0_khz() == 6.0);
    CHECK(p.r_khz() == doctest::Approx(std::sqrt(36.0 + 16.0)).epsilon(1e-12));
    CHECK(p.r_khz() >= p.r0_khz());
}

TEST_SUITE_END();
