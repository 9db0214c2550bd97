#pragma once

#include <cmath>
#include <string>

namespace paracool {

/// CODATA 2018 values, SI units.
struct PhysicalConstants {
    double hbar = 1.054571817e-34;                // J s
    double elementary_charge = 1.602176634e-19;   // C
    double atomic_mass_unit = 1.66053906660e-27;  // kg
    double vacuum_permittivity = 8.8541878128e-12;// F/m

    static const PhysicalConstants& codata() {
        static const PhysicalConstants c{};
        return c;
    }

    /// 1/(4 pi eps0), N m^2 / C^2
    double coulomb_constant() const {
        return 1.0 / (4.0 * M_PI * vacuum_permittivity);
    }
};

struct IonSpecies {
    std::string label;
    double mass_amu = 0.0;
    int charge = 1;  // units of e

    double mass_kg(const PhysicalConstants& c = PhysicalConstants::codata()) const {
        return mass_amu * c.atomic_mass_unit;
    }
    double charge_coulomb(const PhysicalConstants& c = PhysicalConstants::codata()) const {
        return static_cast<double>(charge) * c.elementary_charge;
    }
    bool operator==(const IonSpecies& o) const {
        return label == o.label && mass_amu == o.mass_amu && charge == o.charge;
    }
};

/// Isotopic masses; electron-mass correction neglected.
inline IonSpecies beryllium9() { return {"Be9", 9.0121831, 1}; }
inline IonSpecies magnesium25() { return {"Mg25", 24.9858370, 1}; }

// unit helpers: interfaces carry ordinary frequencies (MHz, kHz), durations in us
inline double angular_from_mhz(double f_mhz) { return 2.0 * M_PI * f_mhz * 1e6; }   // rad/s
inline double angular_from_khz(double f_khz) { return 2.0 * M_PI * f_khz * 1e3; }   // rad/s
inline double mhz_from_angular(double w) { return w / (2.0 * M_PI * 1e6); }
inline double khz_from_angular(double w) { return w / (2.0 * M_PI * 1e3); }
/// phase accumulated by an ordinary-kHz rate over a us duration, in rad
inline double phase_khz_us(double f_khz, double t_us) { return 2.0 * M_PI * f_khz * t_us * 1e-3; }

} // namespace paracool
