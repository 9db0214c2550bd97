#include "paracool/crystal.hpp"

#include <algorithm>
#include <cmath>

namespace paracool::crystal {

namespace {

const PhysicalConstants& kc = PhysicalConstants::codata();

/// Static axial spring constant per unit charge, N/m/e. The axial well is a
/// shared electrostatic curvature, so m w_z^2 / q is species independent.
double axial_stiffness_per_charge(const TrapConfig& trap) {
    const double w = angular_from_mhz(trap.axial_freq_ref_mhz);
    return trap.reference.mass_kg() * w * w / static_cast<double>(trap.reference.charge);
}

double coulomb_prefactor(const IonSpecies& a, const IonSpecies& b) {
    return kc.coulomb_constant() * a.charge_coulomb() * b.charge_coulomb();
}

} // namespace

void TrapConfig::validate() const {
    if (axial_freq_ref_mhz <= 0.0 || radial_pseudo_freq_x_ref_mhz <= 0.0 ||
        radial_pseudo_freq_y_ref_mhz <= 0.0)
        throw Error("trap frequencies must be positive");
    if (reference.mass_amu <= 0.0 || reference.charge < 1)
        throw Error("invalid reference species");
}

void CrystalConfig::validate() const {
    if (species.empty() || species.size() > 10)
        throw Error("crystal must contain 1..10 ions");
    for (const auto& s : species)
        if (s.mass_amu <= 0.0 || s.charge < 1)
            throw Error("invalid species '" + s.label + "'");
}

SingleIonFrequencies single_ion_frequencies(const IonSpecies& species, const TrapConfig& trap) {
    trap.validate();
    const double mass_ratio = trap.reference.mass_amu / species.mass_amu;
    const double charge_ratio =
        static_cast<double>(species.charge) / static_cast<double>(trap.reference.charge);

    SingleIonFrequencies f;
    f.z_mhz = trap.axial_freq_ref_mhz * std::sqrt(charge_ratio * mass_ratio);
    const double scale = charge_ratio * mass_ratio;  // pseudopotential frequency scaling
    const double wz2_half = 0.5 * f.z_mhz * f.z_mhz;
    const double wx2 = scale * scale * trap.radial_pseudo_freq_x_ref_mhz *
                           trap.radial_pseudo_freq_x_ref_mhz - wz2_half;
    const double wy2 = scale * scale * trap.radial_pseudo_freq_y_ref_mhz *
                           trap.radial_pseudo_freq_y_ref_mhz - wz2_half;
    if (wx2 <= 0.0 || wy2 <= 0.0)
        throw NonPositiveRadial("radial confinement too weak for species '" + species.label + "'");
    f.x_mhz = std::sqrt(wx2);
    f.y_mhz = std::sqrt(wy2);
    return f;
}

Eigen::VectorXd equilibrium_positions(const CrystalConfig& crystal, const TrapConfig& trap) {
    crystal.validate();
    trap.validate();
    const int n = crystal.size();
    const double c2 = axial_stiffness_per_charge(trap);

    // characteristic length of the reference-charge two-ion problem
    const double q0 = kc.elementary_charge;
    const double length = std::cbrt(kc.coulomb_constant() * q0 * q0 / c2);

    Eigen::VectorXd z(n);
    for (int j = 0; j < n; ++j)
        z(j) = (j - 0.5 * (n - 1)) * length * std::pow(n, 0.56);  // equal-spacing scaling guess

    if (n == 1) {
        z(0) = 0.0;
        return z * 1e6;
    }

    const double force_scale = c2 * length;
    Eigen::VectorXd force(n);
    Eigen::MatrixXd jac(n, n);
    bool converged = false;
    for (int iter = 0; iter < 200; ++iter) {
        force.setZero();
        jac.setZero();
        for (int j = 0; j < n; ++j) {
            const double qj = static_cast<double>(crystal.species[j].charge);
            force(j) = -c2 * qj * z(j);
            jac(j, j) = -c2 * qj;
            for (int k = 0; k < n; ++k) {
                if (k == j) continue;
                const double d = z(j) - z(k);
                const double cpre = coulomb_prefactor(crystal.species[j], crystal.species[k]);
                force(j) += cpre * (d > 0 ? 1.0 : -1.0) / (d * d);
                jac(j, j) -= 2.0 * cpre / std::pow(std::abs(d), 3);
                jac(j, k) = 2.0 * cpre / std::pow(std::abs(d), 3);
            }
        }
        if (force.cwiseAbs().maxCoeff() < 1e-12 * force_scale) {
            converged = true;
            break;
        }
        Eigen::VectorXd step = jac.fullPivLu().solve(-force);
        // damp steps that would reorder or collide ions
        double lambda = 1.0;
        for (int tries = 0; tries < 60; ++tries) {
            Eigen::VectorXd cand = z + lambda * step;
            bool ordered = true;
            for (int j = 0; j + 1 < n; ++j)
                if (cand(j + 1) - cand(j) < 0.05 * length) ordered = false;
            if (ordered) {
                z = cand;
                break;
            }
            lambda *= 0.5;
        }
    }
    if (!converged)
        throw NoConvergence("equilibrium Newton iteration did not converge in 200 steps");
    return z * 1e6;  // um
}

namespace {

std::string conventional_alias(const CrystalConfig& crystal, Axis axis, int k, int n) {
    const char a = axis_letter(axis);
    if (n == 1) return std::string(1, a);
    const bool same = std::all_of(crystal.species.begin(), crystal.species.end(),
                                  [&](const IonSpecies& s) { return s == crystal.species[0]; });
    if (n == 2) {
        if (same) {
            // axial: com below stretch; radial: rocking below com
            if (axis == Axis::Z) return k == 0 ? std::string(1, a) + "c" : std::string(1, a) + "s";
            return k == 0 ? std::string(1, a) + "r" : std::string(1, a) + "c";
        }
        // mixed species: in-phase / out-of-phase; radial out-of-phase lies lowest
        if (axis == Axis::Z) return k == 0 ? std::string(1, a) + "i" : std::string(1, a) + "o";
        return k == 0 ? std::string(1, a) + "o" : std::string(1, a) + "i";
    }
    if (n == 3 && axis == Axis::Z && crystal.species[0] == crystal.species[2] &&
        !(crystal.species[1] == crystal.species[0])) {
        static const char* names[3] = {"ip", "st", "al"};
        return names[k];
    }
    return {};
}

} // namespace

ModeTable mode_table(const CrystalConfig& crystal, const TrapConfig& trap) {
    ModeTable table;
    table.crystal = crystal;
    table.equilibrium_um = equilibrium_positions(crystal, trap);
    const int n = crystal.size();

    Eigen::VectorXd mass(n);
    for (int j = 0; j < n; ++j) mass(j) = crystal.species[j].mass_kg();
    const Eigen::VectorXd z_m = table.equilibrium_um * 1e-6;

    // linear-crystal condition: every species must be stiffer radially than axially
    for (int j = 0; j < n; ++j) {
        const auto f = single_ion_frequencies(crystal.species[j], trap);
        if (f.x_mhz <= f.z_mhz || f.y_mhz <= f.z_mhz)
            throw NonPositiveRadial("species '" + crystal.species[j].label +
                                    "' radial frequency below axial; crystal is not linear");
    }

    for (Axis axis : {Axis::X, Axis::Y, Axis::Z}) {
        // Hessian of the total potential restricted to one axis, N x N, SI
        Eigen::MatrixXd hess(n, n);
        hess.setZero();
        for (int j = 0; j < n; ++j) {
            const auto f = single_ion_frequencies(crystal.species[j], trap);
            const double w = angular_from_mhz(axis == Axis::X   ? f.x_mhz
                                              : axis == Axis::Y ? f.y_mhz
                                                                : f.z_mhz);
            hess(j, j) = mass(j) * w * w;
            for (int k = 0; k < n; ++k) {
                if (k == j) continue;
                const double cc = coulomb_prefactor(crystal.species[j], crystal.species[k]) /
                                  std::pow(std::abs(z_m(j) - z_m(k)), 3);
                if (axis == Axis::Z) {
                    hess(j, j) += 2.0 * cc;
                    hess(j, k) -= 2.0 * cc;
                } else {
                    hess(j, j) -= cc;
                    hess(j, k) += cc;
                }
            }
        }
        Eigen::MatrixXd mw = hess.array() /
                             (mass * mass.transpose()).array().sqrt();
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(mw);
        if (es.info() != Eigen::Success)
            throw NoConvergence("eigen-decomposition failed");
        for (int k = 0; k < n; ++k) {
            const double lam = es.eigenvalues()(k);
            if (lam <= 0.0)
                throw UnstableMode("non-positive mode stiffness on axis " +
                                   std::string(1, axis_letter(axis)));
            Mode m;
            m.axis = axis;
            m.frequency_mhz = mhz_from_angular(std::sqrt(lam));
            m.participation = es.eigenvectors().col(k);
            for (int j = 0; j < n; ++j) {
                if (std::abs(m.participation(j)) > 1e-12) {
                    if (m.participation(j) < 0.0) m.participation = -m.participation;
                    break;
                }
            }
            table.modes.push_back(std::move(m));
        }
    }
    std::stable_sort(table.modes.begin(), table.modes.end(), [](const Mode& a, const Mode& b) {
        if (a.axis != b.axis) return static_cast<int>(a.axis) < static_cast<int>(b.axis);
        if (std::abs(a.frequency_mhz - b.frequency_mhz) >
            1e-12 * (a.frequency_mhz + b.frequency_mhz))
            return a.frequency_mhz < b.frequency_mhz;
        // degenerate pair: order participations lexicographically
        for (int j = 0; j < a.participation.size(); ++j)
            if (a.participation(j) != b.participation(j))
                return a.participation(j) < b.participation(j);
        return false;
    });
    int rank = 0;
    for (size_t i = 0; i < table.modes.size(); ++i) {
        if (i > 0 && table.modes[i].axis != table.modes[i - 1].axis) rank = 0;
        auto& m = table.modes[i];
        m.label = std::string(1, axis_letter(m.axis)) + std::to_string(rank + 1);
        m.alias = conventional_alias(crystal, m.axis, rank, n);
        ++rank;
    }
    return table;
}

const Mode& ModeTable::mode(const std::string& name) const {
    for (const auto& m : modes)
        if (m.label == name || (!m.alias.empty() && m.alias == name)) return m;
    throw UnknownMode("no mode named '" + name + "'");
}

bool ModeTable::has_mode(const std::string& name) const {
    for (const auto& m : modes)
        if (m.label == name || (!m.alias.empty() && m.alias == name)) return true;
    return false;
}

} // namespace paracool::crystal
