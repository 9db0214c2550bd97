#pragma once

#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include "paracool/exchange.hpp"

namespace paracool::cooling {

struct ModeRates {
    double heating_rate_per_s = 0.0;      // quanta/s
    double csbc_rate_per_s = 0.0;         // 1/s
    double cooling_floor = 0.0;           // quanta
    double second_order_rate_per_s = 0.0; // 1/s, used by order-2 pulses

    void validate() const;
};

struct ContinuousCoolingParams {
    double kappa0_per_s = 0.0;         // bare SCM cooling rate
    double linewidth_khz = 0.0;        // dressed-mode penalty scale; <=0 disables
    double delta_k_per_m = 0.0;        // Raman wavevector difference
    double beta_nm_per_khz = 0.0;      // driven-motion amplitude per unit r0
};

/// kappa0 |J0(dk beta r0)|^2 / (1 + (2g/Gamma)^2)
double effective_kappa_per_s(const ContinuousCoolingParams& p, double g_khz);

struct CsbcPulse {
    std::string mode;
    double duration_us = 0.0;
    int order = 1;  // 2 selects the second-order rate
};
struct SwapPulse {
    std::string mode_a, mode_b;
    double duration_us = 0.0;
    double fidelity = 0.99;
};
struct Delay {
    double duration_us = 0.0;
};
struct SimultaneousCool {
    std::string wcm, scm;
    double g_khz = 0.0;
    double duration_us = 0.0;
    ContinuousCoolingParams params;  // kappa0_per_s = 0 uses the SCM csbc rate
};
/// Instantaneous confinement change; no quanta added, no time elapsed.
struct TrapRamp {
    std::string note;
};
struct Repeat;

using ScheduleElement =
    std::variant<CsbcPulse, SwapPulse, Delay, SimultaneousCool, TrapRamp, Repeat>;

struct Repeat {
    std::vector<ScheduleElement> block;
    int count = 1;
};

struct Schedule {
    std::vector<ScheduleElement> elements;

    double cycle_duration_us() const;
};

using ModeOccupations = std::map<std::string, double>;  // ordered, deterministic
using ModeRatesMap = std::map<std::string, ModeRates>;

struct OccupationTrajectory {
    std::vector<std::string> mode_names;
    std::vector<double> t_us;
    std::vector<ModeOccupations> nbar;

    const ModeOccupations& final() const { return nbar.back(); }
};

void validate_schedule(const Schedule& schedule, const ModeRatesMap& rates);

/// Mean-occupation dynamics of a cooling sequence. CSBC relaxes the target
/// toward its floor at the pulse rate while every mode heats; swaps mix the
/// pair occupations with the stated fidelity.
OccupationTrajectory run_schedule(const Schedule& schedule, const ModeOccupations& initial,
                                  const ModeRatesMap& rates, int samples_per_element = 4);

/// Occupations after exactly one pass over the schedule (no sampling).
ModeOccupations apply_schedule_once(const Schedule& schedule, const ModeOccupations& initial,
                                    const ModeRatesMap& rates);

/// Fixed point of one schedule cycle, from the affine cycle map. NoSteadyState
/// if some mode is never damped (map has a unit eigenvalue).
ModeOccupations pulsed_steady_state(const Schedule& cycle, const ModeRatesMap& rates,
                                    const std::vector<std::string>& mode_names);

/// CSBC closed form: nbar = floor + heating/kappa.
double csbc_steady_state(const ModeRates& rates);

struct ContinuousTrajectory {
    std::vector<double> t_us;
    std::vector<exchange::MomentState> states;
};

/// Damped beam-splitter moment dynamics: SCM damped at effective kappa toward
/// its floor, both modes heated, coherent exchange at rate g.
ContinuousTrajectory continuous_cool(const exchange::MomentState& initial, double g_khz,
                                     const ModeRates& wcm, const ModeRates& scm,
                                     const ContinuousCoolingParams& params, double duration_us,
                                     int samples = 64);

/// Stationary point of the continuous moment system.
exchange::MomentState continuous_steady_state(double g_khz, const ModeRates& wcm,
                                              const ModeRates& scm,
                                              const ContinuousCoolingParams& params);

} // namespace paracool::cooling
