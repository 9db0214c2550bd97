#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "paracool/crystal.hpp"

namespace paracool::fields {

/// Local Taylor data of a potential, SI derivatives at a point on the trap
/// axis. Entries may be NaN to mark "not provided".
struct FieldExpansion {
    Eigen::Vector3d evaluation_point_um = Eigen::Vector3d::Zero();
    Eigen::Vector3d gradient = Eigen::Vector3d::Zero();   // V/m
    Eigen::Matrix3d hessian = Eigen::Matrix3d::Zero();    // V/m^2
    double third_axial = 0.0;                             // d^3 U / dz^3, V/m^3
    bool physical = true;

    void validate() const;
};

/// Taylor-shift an expansion along z to a new point. Only the axial third
/// derivative is carried, distributed Laplace-consistently: Hzz picks up
/// third*dz, Hxx and Hyy each -third*dz/2.
FieldExpansion shift_along_z(const FieldExpansion& e, double z_um);

/// One expansion per ion equilibrium position, shifted from a single
/// on-axis expansion.
std::vector<FieldExpansion> expand_at_ions(const FieldExpansion& e,
                                           const crystal::ModeTable& modes);

struct CouplingBreakdown {
    double g_khz = 0.0;             // |sum|, ordinary kHz
    Eigen::VectorXd per_ion_khz;    // signed contributions
};

/// Parametric coupling rate between two modes for a drive with the given
/// per-ion curvatures: g = |sum_j Q_j a_j xi_w xi_s / (4 M_j sqrt(w_w w_s))|.
/// For an axial-axial pair the needed curvature is Hzz; if Hzz is absent the
/// cubic term supplies it as third_axial * z_j.
CouplingBreakdown coupling_rate(const crystal::ModeTable& modes,
                                const std::vector<FieldExpansion>& per_ion,
                                const std::string& mode_w, const std::string& mode_s);

enum class FieldComponent { Ex, Ey, Ez, Hxx, Hxy, Hxz, Hyy, Hyz, Hzz, D3z };

std::string component_name(FieldComponent c);
FieldComponent component_from_name(const std::string& name);

struct ComponentRef {
    int ion = 0;  // index into the per-ion expansion list
    FieldComponent comp = FieldComponent::Hxz;
};

struct TargetSpec {
    ComponentRef where;
    double value = 0.0;
};

struct NullSpec {
    ComponentRef where;
    double weight = 1.0;
};

struct ElectrodeBasis {
    struct Electrode {
        int id = 0;
        std::vector<FieldExpansion> at_ions;  // per-unit-volt expansions
    };
    std::vector<Electrode> electrodes;

    void validate() const;
};

struct AmplitudeSolution {
    Eigen::VectorXd volts;  // one per electrode, basis order
    struct Achieved {
        ComponentRef where;
        double requested = 0.0;  // target value, or 0 for nulled components
        double achieved = 0.0;
        bool is_target = false;
    };
    std::vector<Achieved> report;
    double target_residual = 0.0;  // max |achieved - requested| over targets
};

/// Weighted linear least squares over electrode amplitudes: targets are met
/// exactly (InfeasibleTarget otherwise), then the weighted norm of the nulled
/// components is minimized over the remaining freedom.
AmplitudeSolution optimize_amplitudes(const ElectrodeBasis& basis,
                                      const std::vector<TargetSpec>& targets,
                                      const std::vector<NullSpec>& nulls);

/// sin^2 ramp / flat / time-reversed ramp. Defaults satisfy
/// sin^2(2 pi f tau_r) = 1 so the envelope is smooth at the flat top.
struct PulseEnvelope {
    double ramp_time_us = 20.0;
    double flat_time_us = 0.0;
    double ramp_freq_khz = 12.5;

    double total_us() const { return 2.0 * ramp_time_us + flat_time_us; }
};

double envelope_value(const PulseEnvelope& env, double t_us);

/// Cascade of identical single-pole low-pass stages.
struct FilterModel {
    double corner_freq_khz = 50.0;
    int stages = 2;
};

double filter_attenuation(const FilterModel& filter, double f_mhz);

struct CouplingDrive {
    std::string mode_w;
    std::string mode_s;
    double drive_freq_mhz = 0.0;   // delta, near |w_w - w_s|
    double g_khz = 0.0;
    PulseEnvelope envelope;
    Eigen::VectorXd amplitudes_v;  // per electrode, may be empty

    double r0_khz() const { return 2.0 * g_khz; }
    void validate() const;
};

/// Electrode basis file format (JSON): see README. Units are embedded in the
/// key names; absent derivative entries load as NaN.
ElectrodeBasis load_electrode_basis(const std::string& path);

} // namespace paracool::fields
