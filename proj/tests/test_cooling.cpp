#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "paper_protocols.hpp"
#include "paracool/cooling.hpp"

using namespace paracool;
using namespace paracool::cooling;

TEST_SUITE_BEGIN("cooling");

TEST_CASE("schedule: a single delay heats linearly") {
    ModeRatesMap rates{{"a", {330.0, 0.0, 0.0, 0.0}}};
    Schedule s{{Delay{500.0}}};
    const auto traj = run_schedule(s, {{"a", 0.1}}, rates, 8);
    CHECK(traj.final().at("a") == doctest::Approx(0.1 + 330.0 * 500e-6).epsilon(1e-12));
    for (size_t i = 0; i < traj.t_us.size(); ++i)
        CHECK(traj.nbar[i].at("a") ==
              doctest::Approx(0.1 + 330.0 * traj.t_us[i] * 1e-6).epsilon(1e-12));
}

TEST_CASE("schedule: perfect swap with zero heating exchanges occupations") {
    ModeRatesMap rates{{"a", {}}, {"b", {}}};
    Schedule s{{SwapPulse{"a", "b", 50.0, 1.0}}};
    const auto out = apply_schedule_once(s, {{"a", 1.3}, {"b", 0.2}}, rates);
    CHECK(out.at("a") == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(out.at("b") == doctest::Approx(1.3).epsilon(1e-14));
}

TEST_CASE("schedule: csbc pulse relaxes exponentially toward floor + heating/kappa") {
    ModeRatesMap rates{{"a", {20.0, 1000.0, 0.05, 0.0}}};
    Schedule s{{CsbcPulse{"a", 2000.0, 1}}};
    const double ninf = 0.05 + 20.0 / 1000.0;
    const auto out = apply_schedule_once(s, {{"a", 1.0}}, rates);
    const double expect = ninf + (1.0 - ninf) * std::exp(-1000.0 * 2000e-6);
    CHECK(out.at("a") == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("schedule property: csbc never undershoots the floor") {
    ModeRatesMap rates{{"a", {0.0, 5000.0, 0.12, 0.0}}};
    Schedule s{{CsbcPulse{"a", 3000.0, 1}}};
    const auto traj = run_schedule(s, {{"a", 2.0}}, rates, 32);
    for (const auto& sample : traj.nbar) CHECK(sample.at("a") >= 0.12 - 1e-12);
}

TEST_CASE("schedule: second-order pulse uses its own rate") {
    ModeRatesMap rates{{"a", {0.0, 1000.0, 0.0, 4000.0}}};
    Schedule s1{{CsbcPulse{"a", 500.0, 1}}};
    Schedule s2{{CsbcPulse{"a", 500.0, 2}}};
    const auto o1 = apply_schedule_once(s1, {{"a", 1.0}}, rates);
    const auto o2 = apply_schedule_once(s2, {{"a", 1.0}}, rates);
    CHECK(o1.at("a") == doctest::Approx(std::exp(-0.5)).epsilon(1e-10));
    CHECK(o2.at("a") == doctest::Approx(std::exp(-2.0)).epsilon(1e-10));
}

TEST_CASE("schedule: unknown mode raises") {
    ModeRatesMap rates{{"a", {}}};
    Schedule s{{CsbcPulse{"b", 10.0, 1}}};
    CHECK_THROWS_AS(run_schedule(s, {{"a", 0.0}}, rates, 2), UnknownMode);
}

TEST_CASE("Be-Mg sequence reaches the observed steady-state ordering") {
    const auto rates = protocols::bemg_rates();
    const auto traj =
        run_schedule(protocols::bemg_sequence(10), protocols::bemg_doppler_start(), rates, 2);
    const auto fin = traj.final();
    CHECK(fin.at("yo") > fin.at("zo"));
    CHECK(fin.at("zo") > fin.at("xo"));
    // neighbourhood of the measured {0.03, 0.23, 0.11}
    CHECK(fin.at("xo") > 0.01);
    CHECK(fin.at("xo") < 0.09);
    CHECK(fin.at("yo") > 0.15);
    CHECK(fin.at("yo") < 0.33);
    CHECK(fin.at("zo") > 0.06);
    CHECK(fin.at("zo") < 0.16);
}

TEST_CASE("pulsed steady state equals the long-run limit of the cycle") {
    const auto rates = protocols::bemg_rates();
    const auto cycle = protocols::bemg_cycle();
    const auto fix = pulsed_steady_state(cycle, rates, {"xo", "yo", "zo", "ip"});

    ModeOccupations n = protocols::bemg_doppler_start();
    for (int i = 0; i < 400; ++i) n = apply_schedule_once(cycle, n, rates);
    for (const auto& [mode, v] : fix) CHECK(std::abs(n.at(mode) - v) < 1e-6);
}

TEST_CASE("pulsed steady state: undamped mode raises NoSteadyState") {
    ModeRatesMap rates{{"a", {10.0, 1000.0, 0.0, 0.0}}, {"b", {10.0, 0.0, 0.0, 0.0}}};
    Schedule cycle{{CsbcPulse{"a", 100.0, 1}, Delay{50.0}}};
    CHECK_THROWS_AS(pulsed_steady_state(cycle, rates, {"a", "b"}), NoSteadyState);
}

TEST_CASE("pulsed cooling property: zero heating and unit fidelity reach the floors") {
    ModeRatesMap rates;
    rates["w"] = {0.0, 0.0, 0.0, 0.0};
    rates["s"] = {0.0, 20000.0, 0.02, 0.0};
    Schedule cycle{{CsbcPulse{"s", 400.0, 1}, SwapPulse{"s", "w", 50.0, 1.0},
                    CsbcPulse{"s", 400.0, 1}}};
    ModeOccupations n{{"w", 3.0}, {"s", 2.0}};
    for (int i = 0; i < 60; ++i) n = apply_schedule_once(cycle, n, rates);
    CHECK(n.at("w") == doctest::Approx(0.02).epsilon(1e-7));
    CHECK(n.at("s") == doctest::Approx(0.02).epsilon(1e-7));
    rates["s"].cooling_floor = 0.0;
    n = {{"w", 3.0}, {"s", 2.0}};
    for (int i = 0; i < 80; ++i) n = apply_schedule_once(cycle, n, rates);
    CHECK(n.at("w") < 1e-9);
    CHECK(n.at("s") < 1e-9);
}

TEST_CASE("pulsed cooling property: cycle map approaches the fixed point monotonically") {
    const auto rates = protocols::bemg_rates();
    const auto cycle = protocols::bemg_cycle();
    const auto fix = pulsed_steady_state(cycle, rates, {"xo", "yo", "zo", "ip"});
    ModeOccupations n = protocols::bemg_doppler_start();
    double prev = std::numeric_limits<double>::infinity();
    for (int i = 0; i < 25; ++i) {
        n = apply_schedule_once(cycle, n, rates);
        double dist = 0.0;
        for (const auto& [mode, v] : fix) dist = std::max(dist, std::abs(n.at(mode) - v));
        CHECK(dist <= prev + 1e-12);
        prev = dist;
    }
}

TEST_CASE("csbc steady state closed form") {
    CHECK(csbc_steady_state({20.0, 100.0, 0.01, 0.0}) == doctest::Approx(0.21).epsilon(1e-12));
    CHECK(csbc_steady_state({0.0, 100.0, 0.07, 0.0}) == doctest::Approx(0.07).epsilon(1e-12));
    CHECK_THROWS_AS(csbc_steady_state({10.0, 0.0, 0.0, 0.0}), NoSteadyState);
}

TEST_CASE("effective kappa: bessel and dressed-mode penalties") {
    ContinuousCoolingParams p;
    p.kappa0_per_s = 1000.0;
    CHECK(effective_kappa_per_s(p, 2.0) == doctest::Approx(1000.0).epsilon(1e-12));
    p.linewidth_khz = 4.0;
    CHECK(effective_kappa_per_s(p, 2.0) == doctest::Approx(500.0).epsilon(1e-12));  // r0 = Gamma
    p.linewidth_khz = 0.0;
    p.delta_k_per_m = 3.17e7;
    p.beta_nm_per_khz = 101.0;
    const double idx = 3.17e7 * 101e-9 * 1.0;
    const double j0 = std::cyl_bessel_j(0.0, idx);
    CHECK(effective_kappa_per_s(p, 0.5) == doctest::Approx(1000.0 * j0 * j0).epsilon(1e-12));
}

TEST_CASE("continuous cooling: g = 0 decouples the modes") {
    ModeRates wcm{40.0, 0.0, 0.0, 0.0};
    ModeRates scm{25.0, 0.0, 0.0, 0.0};
    ContinuousCoolingParams p;
    p.kappa0_per_s = 5000.0;
    const auto traj = continuous_cool({1.0, 1.0, 0.0}, 0.0, wcm, scm, p, 2000.0, 4);
    const auto& fin = traj.states.back();
    CHECK(fin.nbar_w == doctest::Approx(1.0 + 40.0 * 2000e-6).epsilon(1e-9));
    CHECK(fin.nbar_s ==
          doctest::Approx(25.0 / 5000.0 + (1.0 - 25.0 / 5000.0) * std::exp(-5000.0 * 2000e-6))
              .epsilon(1e-7));
}

TEST_CASE("continuous cooling: strong coupling decays at half the cooling rate") {
    // eigenvalues of the coherent 3x3 block for g >> kappa all sit at -kappa/2
    const double g_khz = 8.0, kappa = 800.0;  // per s
    const double ga = 2.0 * M_PI * g_khz * 1e3;
    Eigen::Matrix3d m;
    m << 0.0, 0.0, 2.0 * ga,
         0.0, -kappa, -2.0 * ga,
         -ga, ga, -0.5 * kappa;
    const Eigen::Vector3cd ev = m.eigenvalues();
    for (int i = 0; i < 3; ++i)
        CHECK(ev(i).real() == doctest::Approx(-0.5 * kappa).epsilon(1e-3));

    ModeRates none{0.0, 0.0, 0.0, 0.0};
    ContinuousCoolingParams p;
    p.kappa0_per_s = kappa;
    const auto traj = continuous_cool({1.0, 1.0, 0.0}, g_khz, none, none, p, 4000.0, 2);
    const double expect = 2.0 * std::exp(-0.5 * kappa * 4000e-6);
    const double total = traj.states.back().nbar_w + traj.states.back().nbar_s;
    CHECK(total == doctest::Approx(expect).epsilon(0.02));
}

TEST_CASE("continuous cooling: weak coupling cools the WCM at about 4g^2/kappa") {
    const double g_khz = 0.12, kappa = 40000.0;
    const double ga = 2.0 * M_PI * g_khz * 1e3;  // rad/s
    const double rate = 4.0 * ga * ga / kappa;   // impedance-matched WCM rate
    ModeRates none{0.0, 0.0, 0.0, 0.0};
    ContinuousCoolingParams p;
    p.kappa0_per_s = kappa;
    const double t_us = 1.0 / rate * 1e6;  // one decay time
    const auto traj = continuous_cool({1.0, 0.0, 0.0}, g_khz, none, none, p, t_us, 2);
    CHECK(traj.states.back().nbar_w == doctest::Approx(std::exp(-1.0)).epsilon(0.03));
}

TEST_CASE("continuous steady state matches a long integration") {
    ModeRates wcm{15.0, 0.0, 0.0, 0.0};
    ModeRates scm{40.0, 0.0, 0.012, 0.0};
    const auto p = protocols::bmb_continuous(12.6);
    const double g = 0.6;
    const auto ss = continuous_steady_state(g, wcm, scm, p);
    const auto traj = continuous_cool({2.0, 0.1, 0.0}, g, wcm, scm, p, 4e5, 2);
    CHECK(traj.states.back().nbar_w == doctest::Approx(ss.nbar_w).epsilon(1e-5));
    CHECK(traj.states.back().nbar_s == doctest::Approx(ss.nbar_s).epsilon(1e-5));
    CHECK_THROWS_AS(continuous_steady_state(0.0, wcm, scm, p), NoSteadyState);
}

TEST_CASE("continuous scheme: final stretch occupation has an interior optimum in r0") {
    const auto params = protocols::bmb_continuous(12.6);
    const auto wcm = protocols::bmb_stretch_rates();
    const auto scm = protocols::bmb_alt_rates();
    auto final_nbar = [&](double r0_khz) {
        exchange::MomentState st{2.0, 0.05, 0.0};
        for (int m = 0; m < 25; ++m) {  // 25 repetitions of the 300 us block
            const auto traj = continuous_cool(st, 0.5 * r0_khz, wcm, scm, params, 300.0, 1);
            st = traj.states.back();
            st.cross = 0.0;  // coherence reset between blocks
        }
        return st.nbar_w;
    };
    const double low = final_nbar(0.1);
    const double mid = final_nbar(2.0);
    const double high = final_nbar(6.0);
    CHECK(mid < low);
    CHECK(mid < high);
}

TEST_CASE("continuous scheme: field compensation moves the optimum to larger r0") {
    const auto wcm = protocols::bmb_stretch_rates();
    const auto scm = protocols::bmb_alt_rates();
    auto optimum = [&](double beta) {
        const auto params = protocols::bmb_continuous(beta);
        double best_r0 = 0.0, best = 1e300;
        for (double r0 = 0.2; r0 <= 6.0; r0 += 0.2) {
            exchange::MomentState st{2.0, 0.05, 0.0};
            for (int m = 0; m < 25; ++m) {
                const auto t = cooling::continuous_cool(st, 0.5 * r0, wcm, scm, params, 300.0, 1);
                st = t.states.back();
                st.cross = 0.0;
            }
            if (st.nbar_w < best) {
                best = st.nbar_w;
                best_r0 = r0;
            }
        }
        return best_r0;
    };
    const double before = optimum(101.0);
    const double after = optimum(12.6);
    CHECK(after > before);
    CHECK(before > 0.2);   // interior on the scanned range
    CHECK(after < 6.0);
}

TEST_CASE("trap ramp element adds no quanta and no time") {
    ModeRatesMap rates{{"a", {100.0, 0.0, 0.0, 0.0}}};
    Schedule s{{Delay{100.0}, TrapRamp{"rf down"}, Delay{100.0}}};
    const auto traj = run_schedule(s, {{"a", 0.5}}, rates, 1);
    CHECK(traj.t_us.back() == doctest::Approx(200.0).epsilon(1e-12));
    CHECK(traj.final().at("a") == doctest::Approx(0.5 + 100.0 * 200e-6).epsilon(1e-12));
}

TEST_CASE("simultaneous schedule element matches continuous_cool") {
    ModeRatesMap rates;
    rates["w"] = protocols::bmb_stretch_rates();
    rates["s"] = protocols::bmb_alt_rates();
    SimultaneousCool el;
    el.wcm = "w";
    el.scm = "s";
    el.g_khz = 0.645;
    el.duration_us = 300.0;
    el.params = protocols::bmb_continuous(12.6);
    Schedule s{{el}};
    const auto out = apply_schedule_once(s, {{"w", 2.0}, {"s", 0.05}}, rates);
    const auto traj = continuous_cool({2.0, 0.05, 0.0}, 0.645, rates["w"], rates["s"],
                                      el.params, 300.0, 1);
    CHECK(out.at("w") == doctest::Approx(traj.states.back().nbar_w).epsilon(1e-9));
    CHECK(out.at("s") == doctest::Approx(traj.states.back().nbar_s).epsilon(1e-9));
}

TEST_CASE("schedule validation rejects bad elements") {
    ModeRatesMap rates{{"a", {}}, {"b", {}}};
    CHECK_THROWS_AS(validate_schedule(Schedule{{CsbcPulse{"a", -1.0, 1}}}, rates), Error);
    CHECK_THROWS_AS(validate_schedule(Schedule{{SwapPulse{"a", "b", 10.0, 1.5}}}, rates), Error);
    CHECK_THROWS_AS(validate_schedule(Schedule{{SwapPulse{"a", "a", 10.0, 0.9}}}, rates), Error);
    CHECK_THROWS_AS(validate_schedule(Schedule{{Repeat{{{Delay{5.0}}}, 0}}}, rates), Error);
    CHECK_NOTHROW(validate_schedule(Schedule{{TrapRamp{"rf down"}}}, rates));
}

TEST_SUITE_END();
