#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "paracool/constants.hpp"
#include "paracool/errors.hpp"

namespace paracool::crystal {

enum class Axis { X = 0, Y = 1, Z = 2 };

inline char axis_letter(Axis a) { return a == Axis::X ? 'x' : (a == Axis::Y ? 'y' : 'z'); }

/// Static and pseudopotential confinement, quoted for a reference species.
/// Other species scale as w_z ~ sqrt(q m_ref / m) and w_pseudo ~ q m_ref / m.
struct TrapConfig {
    IonSpecies reference;
    double axial_freq_ref_mhz = 0.0;
    double radial_pseudo_freq_x_ref_mhz = 0.0;
    double radial_pseudo_freq_y_ref_mhz = 0.0;

    void validate() const;
};

struct CrystalConfig {
    std::vector<IonSpecies> species;  // position 1..N along z

    int size() const { return static_cast<int>(species.size()); }
    void validate() const;
};

struct SingleIonFrequencies {
    double x_mhz = 0.0;
    double y_mhz = 0.0;
    double z_mhz = 0.0;
};

/// Per-species secular frequencies. Radial: w^2 = (q m_ref/m)^2 wp^2 - w_z^2/2,
/// the static axial curvature defocusing split equally between x and y.
SingleIonFrequencies single_ion_frequencies(const IonSpecies& species, const TrapConfig& trap);

/// Equilibrium positions along z (um), strictly ordered. Damped Newton on the
/// force vector; relative force tolerance 1e-12.
Eigen::VectorXd equilibrium_positions(const CrystalConfig& crystal, const TrapConfig& trap);

struct Mode {
    std::string label;        // canonical "<axis><k>", k ascending in frequency
    std::string alias;        // conventional name where one exists ("zs", "zo", "st", ...)
    Axis axis = Axis::Z;
    double frequency_mhz = 0.0;
    Eigen::VectorXd participation;  // mass-weighted, unit norm, first nonzero entry > 0
};

struct ModeTable {
    CrystalConfig crystal;
    Eigen::VectorXd equilibrium_um;
    std::vector<Mode> modes;  // sorted by (axis, frequency)

    const Mode& mode(const std::string& name) const;  // canonical label or alias
    bool has_mode(const std::string& name) const;
};

/// All 3N normal modes from the mass-weighted Hessian at equilibrium.
ModeTable mode_table(const CrystalConfig& crystal, const TrapConfig& trap);

} // namespace paracool::crystal
