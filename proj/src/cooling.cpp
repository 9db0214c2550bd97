#include "paracool/cooling.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "paracool/ode.hpp"

namespace paracool::cooling {

void ModeRates::validate() const {
    if (heating_rate_per_s < 0.0 || csbc_rate_per_s < 0.0 || cooling_floor < 0.0 ||
        second_order_rate_per_s < 0.0)
        throw Error("mode rates must be non-negative");
}

double effective_kappa_per_s(const ContinuousCoolingParams& p, double g_khz) {
    const double r0 = 2.0 * g_khz;
    double k = p.kappa0_per_s;
    if (p.beta_nm_per_khz > 0.0 && p.delta_k_per_m > 0.0) {
        const double idx = p.delta_k_per_m * p.beta_nm_per_khz * 1e-9 * r0;
        const double j0 = std::cyl_bessel_j(0.0, std::abs(idx));
        k *= j0 * j0;
    }
    if (p.linewidth_khz > 0.0) k /= 1.0 + (r0 / p.linewidth_khz) * (r0 / p.linewidth_khz);
    return k;
}

double Schedule::cycle_duration_us() const {
    double total = 0.0;
    for (const auto& el : elements) {
        std::visit(
            [&](const auto& e) {
                using T = std::decay_t<decltype(e)>;
                if constexpr (std::is_same_v<T, CsbcPulse> || std::is_same_v<T, SwapPulse> ||
                              std::is_same_v<T, Delay> || std::is_same_v<T, SimultaneousCool>)
                    total += e.duration_us;
                else if constexpr (std::is_same_v<T, Repeat>)
                    total += e.count * Schedule{e.block}.cycle_duration_us();
            },
            el);
    }
    return total;
}

namespace {

void require_mode(const ModeRatesMap& rates, const std::string& name) {
    if (!rates.count(name)) throw UnknownMode("schedule references unknown mode '" + name + "'");
}

void validate_element(const ScheduleElement& el, const ModeRatesMap& rates) {
    std::visit(
        [&](const auto& e) {
            using T = std::decay_t<decltype(e)>;
            if constexpr (std::is_same_v<T, CsbcPulse>) {
                if (e.duration_us <= 0.0) throw Error("csbc pulse needs positive duration");
                if (e.order != 1 && e.order != 2) throw Error("csbc order must be 1 or 2");
                require_mode(rates, e.mode);
            } else if constexpr (std::is_same_v<T, SwapPulse>) {
                if (e.duration_us <= 0.0) throw Error("swap needs positive duration");
                if (e.fidelity < 0.0 || e.fidelity > 1.0) throw Error("swap fidelity outside [0,1]");
                if (e.mode_a == e.mode_b) throw Error("swap needs two distinct modes");
                require_mode(rates, e.mode_a);
                require_mode(rates, e.mode_b);
            } else if constexpr (std::is_same_v<T, Delay>) {
                if (e.duration_us <= 0.0) throw Error("delay needs positive duration");
            } else if constexpr (std::is_same_v<T, SimultaneousCool>) {
                if (e.duration_us <= 0.0) throw Error("simultaneous cool needs positive duration");
                if (e.g_khz < 0.0) throw Error("coupling rate must be non-negative");
                if (e.wcm == e.scm) throw Error("simultaneous cool needs two distinct modes");
                require_mode(rates, e.wcm);
                require_mode(rates, e.scm);
            } else if constexpr (std::is_same_v<T, Repeat>) {
                if (e.count < 1) throw Error("repeat count must be >= 1");
                for (const auto& sub : e.block) validate_element(sub, rates);
            }
        },
        el);
}

struct Walker {
    const ModeRatesMap& rates;
    ModeOccupations n;
    double t_us = 0.0;
    int samples_per_element;
    OccupationTrajectory* traj = nullptr;  // optional

    void record() {
        if (!traj) return;
        traj->t_us.push_back(t_us);
        traj->nbar.push_back(n);
    }

    void heat_all(double dt_us, const std::string& skip = {}) {
        for (auto& [name, v] : n)
            if (name != skip) v += rates.at(name).heating_rate_per_s * dt_us * 1e-6;
    }

    void csbc_step(const CsbcPulse& e, double dt_us) {
        const auto& r = rates.at(e.mode);
        const double kappa = (e.order == 2 ? r.second_order_rate_per_s : r.csbc_rate_per_s) * 1e-6;
        const double heat = r.heating_rate_per_s * 1e-6;
        heat_all(dt_us, e.mode);
        double& v = n.at(e.mode);
        if (kappa <= 0.0) {
            v += heat * dt_us;
        } else {
            const double ninf = r.cooling_floor + heat / kappa;
            v = ninf + (v - ninf) * std::exp(-kappa * dt_us);
        }
    }

    void sim_cool_step(const SimultaneousCool& e, double dt_us) {
        ContinuousCoolingParams p = e.params;
        if (p.kappa0_per_s <= 0.0) p.kappa0_per_s = rates.at(e.scm).csbc_rate_per_s;
        const double kappa = effective_kappa_per_s(p, e.g_khz) * 1e-6;  // per us
        const double g = angular_from_khz(e.g_khz) * 1e-6;              // rad/us
        const auto& rw = rates.at(e.wcm);
        const auto& rs = rates.at(e.scm);
        const double hw = rw.heating_rate_per_s * 1e-6, hs = rs.heating_rate_per_s * 1e-6;
        const double floor_s = rs.cooling_floor;

        auto rhs = [&](double, const Eigen::Vector4d& y) {
            Eigen::Vector4d d;
            d(0) = 2.0 * g * y(3) + hw;
            d(1) = -2.0 * g * y(3) - kappa * (y(1) - floor_s) + hs;
            d(2) = -0.5 * kappa * y(2);
            d(3) = g * (y(1) - y(0)) - 0.5 * kappa * y(3);
            return d;
        };
        // coherence is not tracked across schedule elements
        Eigen::Vector4d y(n.at(e.wcm), n.at(e.scm), 0.0, 0.0);
        y = ode::integrate(y, 0.0, dt_us, rhs, 1e-10, 1e-13);
        heat_all(dt_us, "");  // heats every mode, then overwrite the pair
        n.at(e.wcm) = y(0);
        n.at(e.scm) = y(1);
    }

    void run(const std::vector<ScheduleElement>& elements) {
        for (const auto& el : elements) {
            std::visit(
                [&](const auto& e) {
                    using T = std::decay_t<decltype(e)>;
                    if constexpr (std::is_same_v<T, CsbcPulse>) {
                        const int k = std::max(1, samples_per_element);
                        for (int i = 0; i < k; ++i) {
                            csbc_step(e, e.duration_us / k);
                            t_us += e.duration_us / k;
                            record();
                        }
                    } else if constexpr (std::is_same_v<T, SwapPulse>) {
                        double& a = n.at(e.mode_a);
                        double& b = n.at(e.mode_b);
                        const double na = a, nb = b;
                        a = e.fidelity * nb + (1.0 - e.fidelity) * na;
                        b = e.fidelity * na + (1.0 - e.fidelity) * nb;
                        heat_all(e.duration_us);
                        t_us += e.duration_us;
                        record();
                    } else if constexpr (std::is_same_v<T, Delay>) {
                        const int k = std::max(1, samples_per_element);
                        for (int i = 0; i < k; ++i) {
                            heat_all(e.duration_us / k);
                            t_us += e.duration_us / k;
                            record();
                        }
                    } else if constexpr (std::is_same_v<T, SimultaneousCool>) {
                        const int k = std::max(1, samples_per_element);
                        for (int i = 0; i < k; ++i) {
                            sim_cool_step(e, e.duration_us / k);
                            t_us += e.duration_us / k;
                            record();
                        }
                    } else if constexpr (std::is_same_v<T, TrapRamp>) {
                        record();
                    } else if constexpr (std::is_same_v<T, Repeat>) {
                        for (int i = 0; i < e.count; ++i) run(e.block);
                    }
                },
                el);
        }
    }

};

} // namespace

void validate_schedule(const Schedule& schedule, const ModeRatesMap& rates) {
    for (const auto& [name, r] : rates) {
        (void)name;
        r.validate();
    }
    for (const auto& el : schedule.elements) validate_element(el, rates);
}

OccupationTrajectory run_schedule(const Schedule& schedule, const ModeOccupations& initial,
                                  const ModeRatesMap& rates, int samples_per_element) {
    validate_schedule(schedule, rates);
    for (const auto& [name, v] : initial) {
        require_mode(rates, name);
        if (v < 0.0) throw Error("negative initial occupation for '" + name + "'");
    }
    OccupationTrajectory traj;
    for (const auto& [name, v] : initial) {
        (void)v;
        traj.mode_names.push_back(name);
    }
    Walker w{rates, initial, 0.0, samples_per_element, &traj};
    w.record();
    w.run(schedule.elements);
    return traj;
}

ModeOccupations apply_schedule_once(const Schedule& schedule, const ModeOccupations& initial,
                                    const ModeRatesMap& rates) {
    validate_schedule(schedule, rates);
    Walker w{rates, initial, 0.0, 1, nullptr};
    w.run(schedule.elements);
    return w.n;
}

ModeOccupations pulsed_steady_state(const Schedule& cycle, const ModeRatesMap& rates,
                                    const std::vector<std::string>& mode_names) {
    const int n = static_cast<int>(mode_names.size());
    ModeOccupations zero;
    for (const auto& m : mode_names) zero[m] = 0.0;

    // the cycle map is affine: extract offset and matrix columns
    const ModeOccupations b_map = apply_schedule_once(cycle, zero, rates);
    Eigen::VectorXd b(n);
    for (int i = 0; i < n; ++i) b(i) = b_map.at(mode_names[i]);

    Eigen::MatrixXd A(n, n);
    for (int j = 0; j < n; ++j) {
        ModeOccupations e = zero;
        e[mode_names[j]] = 1.0;
        const ModeOccupations col = apply_schedule_once(cycle, e, rates);
        for (int i = 0; i < n; ++i) A(i, j) = col.at(mode_names[i]) - b(i);
    }

    const Eigen::VectorXcd ev = Eigen::EigenSolver<Eigen::MatrixXd>(A, false).eigenvalues();
    if (ev.cwiseAbs().maxCoeff() >= 1.0 - 1e-12)
        throw NoSteadyState("cycle map is not a contraction; some mode is never damped");

    Eigen::VectorXd fix =
        (Eigen::MatrixXd::Identity(n, n) - A).fullPivLu().solve(b);
    ModeOccupations out;
    for (int i = 0; i < n; ++i) out[mode_names[i]] = fix(i);
    return out;
}

double csbc_steady_state(const ModeRates& rates) {
    rates.validate();
    if (rates.csbc_rate_per_s <= 0.0)
        throw NoSteadyState("undamped mode has no CSBC steady state");
    return rates.cooling_floor + rates.heating_rate_per_s / rates.csbc_rate_per_s;
}

ContinuousTrajectory continuous_cool(const exchange::MomentState& initial, double g_khz,
                                     const ModeRates& wcm, const ModeRates& scm,
                                     const ContinuousCoolingParams& params, double duration_us,
                                     int samples) {
    initial.validate();
    wcm.validate();
    scm.validate();
    if (g_khz < 0.0) throw Error("coupling rate must be non-negative");
    const double kappa = effective_kappa_per_s(params, g_khz) * 1e-6;
    const double g = angular_from_khz(g_khz) * 1e-6;
    const double hw = wcm.heating_rate_per_s * 1e-6, hs = scm.heating_rate_per_s * 1e-6;
    const double floor_s = scm.cooling_floor;

    auto rhs = [&](double, const Eigen::Vector4d& y) {
        Eigen::Vector4d d;
        d(0) = 2.0 * g * y(3) + hw;
        d(1) = -2.0 * g * y(3) - kappa * (y(1) - floor_s) + hs;
        d(2) = -0.5 * kappa * y(2);
        d(3) = g * (y(1) - y(0)) - 0.5 * kappa * y(3);
        return d;
    };

    ContinuousTrajectory traj;
    Eigen::Vector4d y(initial.nbar_w, initial.nbar_s, initial.cross.real(),
                      initial.cross.imag());
    traj.t_us.push_back(0.0);
    traj.states.push_back(initial);
    const int k = std::max(1, samples);
    for (int i = 1; i <= k; ++i) {
        const double t0 = duration_us * (i - 1) / k;
        const double t1 = duration_us * i / k;
        y = ode::integrate(y, t0, t1, rhs, 1e-10, 1e-13);
        exchange::MomentState s;
        s.nbar_w = y(0);
        s.nbar_s = y(1);
        s.cross = {y(2), y(3)};
        traj.t_us.push_back(t1);
        traj.states.push_back(s);
    }
    return traj;
}

exchange::MomentState continuous_steady_state(double g_khz, const ModeRates& wcm,
                                              const ModeRates& scm,
                                              const ContinuousCoolingParams& params) {
    const double kappa = effective_kappa_per_s(params, g_khz);  // per s
    if (g_khz <= 0.0 || kappa <= 0.0)
        throw NoSteadyState("continuous scheme needs g > 0 and a damped SCM");
    const double g = angular_from_khz(g_khz);  // rad/s
    const double hw = wcm.heating_rate_per_s, hs = scm.heating_rate_per_s;

    exchange::MomentState out;
    const double yi = -hw / (2.0 * g);
    out.nbar_s = scm.cooling_floor + (hw + hs) / kappa;
    out.nbar_w = out.nbar_s - kappa * yi / (2.0 * g);
    out.cross = {0.0, yi};
    return out;
}

} // namespace paracool::cooling
