#include "paracool/fields.hpp"

#include <cmath>
#include <fstream>

#include <json.hpp>

namespace paracool::fields {

namespace {
const PhysicalConstants& kc = PhysicalConstants::codata();

bool known(double v) { return !std::isnan(v); }
} // namespace

void FieldExpansion::validate() const {
    for (int i = 0; i < 3; ++i)
        for (int j = i + 1; j < 3; ++j) {
            const double a = hessian(i, j), b = hessian(j, i);
            if (known(a) && known(b) && std::abs(a - b) > 1e-9 * std::max({1.0, std::abs(a), std::abs(b)}))
                throw Error("field expansion hessian must be symmetric");
        }
    if (physical) {
        const double tr = hessian.trace();
        const double scale = hessian.cwiseAbs().maxCoeff();
        if (known(tr) && scale > 0.0 && std::abs(tr) > 1e-6 * scale)
            throw Error("physical field expansion violates Laplace (nonzero hessian trace)");
    }
}

FieldExpansion shift_along_z(const FieldExpansion& e, double z_um) {
    FieldExpansion out = e;
    const double dz = (z_um - e.evaluation_point_um(2)) * 1e-6;  // m
    out.evaluation_point_um(2) = z_um;
    out.gradient(0) += e.hessian(0, 2) * dz;
    out.gradient(1) += e.hessian(1, 2) * dz;
    out.gradient(2) += e.hessian(2, 2) * dz + 0.5 * e.third_axial * dz * dz;
    out.hessian(2, 2) += e.third_axial * dz;
    out.hessian(0, 0) -= 0.5 * e.third_axial * dz;
    out.hessian(1, 1) -= 0.5 * e.third_axial * dz;
    return out;
}

std::vector<FieldExpansion> expand_at_ions(const FieldExpansion& e,
                                           const crystal::ModeTable& modes) {
    std::vector<FieldExpansion> out;
    out.reserve(modes.equilibrium_um.size());
    for (int j = 0; j < modes.equilibrium_um.size(); ++j)
        out.push_back(shift_along_z(e, modes.equilibrium_um(j)));
    return out;
}

CouplingBreakdown coupling_rate(const crystal::ModeTable& modes,
                                const std::vector<FieldExpansion>& per_ion,
                                const std::string& mode_w, const std::string& mode_s) {
    if (mode_w == mode_s) throw Error("coupling_rate requires two distinct modes");
    const auto& mw = modes.mode(mode_w);
    const auto& ms = modes.mode(mode_s);
    const int n = modes.crystal.size();
    if (static_cast<int>(per_ion.size()) != n)
        throw MissingCurvature("need one field expansion per ion");

    const int iw = static_cast<int>(mw.axis);
    const int is = static_cast<int>(ms.axis);
    const double ww = angular_from_mhz(mw.frequency_mhz);
    const double ws = angular_from_mhz(ms.frequency_mhz);

    CouplingBreakdown out;
    out.per_ion_khz.resize(n);
    double sum = 0.0;  // rad/s
    for (int j = 0; j < n; ++j) {
        double alpha = per_ion[j].hessian(iw, is);
        if (!known(alpha) && iw == 2 && is == 2 && known(per_ion[j].third_axial))
            alpha = per_ion[j].third_axial * modes.equilibrium_um(j) * 1e-6;
        if (!known(alpha))
            throw MissingCurvature("curvature d2U/d" + std::string(1, crystal::axis_letter(mw.axis)) +
                                   "d" + std::string(1, crystal::axis_letter(ms.axis)) +
                                   " missing at ion " + std::to_string(j));
        const auto& sp = modes.crystal.species[j];
        const double gj = sp.charge_coulomb() * alpha /
                          (4.0 * sp.mass_kg() * std::sqrt(ww * ws)) *
                          mw.participation(j) * ms.participation(j);
        out.per_ion_khz(j) = khz_from_angular(gj);
        sum += gj;
    }
    out.g_khz = std::abs(khz_from_angular(sum));
    return out;
}

std::string component_name(FieldComponent c) {
    switch (c) {
        case FieldComponent::Ex: return "Ex";
        case FieldComponent::Ey: return "Ey";
        case FieldComponent::Ez: return "Ez";
        case FieldComponent::Hxx: return "Hxx";
        case FieldComponent::Hxy: return "Hxy";
        case FieldComponent::Hxz: return "Hxz";
        case FieldComponent::Hyy: return "Hyy";
        case FieldComponent::Hyz: return "Hyz";
        case FieldComponent::Hzz: return "Hzz";
        case FieldComponent::D3z: return "D3z";
    }
    return "?";
}

FieldComponent component_from_name(const std::string& name) {
    for (int c = 0; c <= static_cast<int>(FieldComponent::D3z); ++c)
        if (component_name(static_cast<FieldComponent>(c)) == name)
            return static_cast<FieldComponent>(c);
    throw Error("unknown field component '" + name + "'");
}

namespace {

double component_value(const FieldExpansion& e, FieldComponent c) {
    switch (c) {
        case FieldComponent::Ex: return -e.gradient(0);
        case FieldComponent::Ey: return -e.gradient(1);
        case FieldComponent::Ez: return -e.gradient(2);
        case FieldComponent::Hxx: return e.hessian(0, 0);
        case FieldComponent::Hxy: return e.hessian(0, 1);
        case FieldComponent::Hxz: return e.hessian(0, 2);
        case FieldComponent::Hyy: return e.hessian(1, 1);
        case FieldComponent::Hyz: return e.hessian(1, 2);
        case FieldComponent::Hzz: return e.hessian(2, 2);
        case FieldComponent::D3z: return e.third_axial;
    }
    return 0.0;
}

} // namespace

void ElectrodeBasis::validate() const {
    if (electrodes.empty()) throw Error("electrode basis is empty");
    const size_t n = electrodes.front().at_ions.size();
    for (const auto& e : electrodes) {
        if (e.at_ions.size() != n || n == 0)
            throw Error("electrode basis needs the same nonzero ion count per electrode");
        for (const auto& ex : e.at_ions) ex.validate();
    }
}

AmplitudeSolution optimize_amplitudes(const ElectrodeBasis& basis,
                                      const std::vector<TargetSpec>& targets,
                                      const std::vector<NullSpec>& nulls) {
    basis.validate();
    const int ne = static_cast<int>(basis.electrodes.size());
    const int nions = static_cast<int>(basis.electrodes.front().at_ions.size());

    auto column = [&](const ComponentRef& ref) {
        if (ref.ion < 0 || ref.ion >= nions) throw Error("component ion index out of range");
        Eigen::VectorXd col(ne);
        for (int e = 0; e < ne; ++e)
            col(e) = component_value(basis.electrodes[e].at_ions[ref.ion], ref.comp);
        if (!col.allFinite()) throw MissingCurvature("basis lacks component " +
                                                     component_name(ref.comp));
        return col;
    };

    const int nt = static_cast<int>(targets.size());
    Eigen::MatrixXd T(nt, ne);
    Eigen::VectorXd t(nt);
    for (int i = 0; i < nt; ++i) {
        T.row(i) = column(targets[i].where).transpose();
        t(i) = targets[i].value;
    }

    // minimum-norm exact solve of the target constraints
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(T);
    Eigen::VectorXd v0 = nt > 0 ? Eigen::VectorXd(cod.solve(t))
                                : Eigen::VectorXd(Eigen::VectorXd::Zero(ne));
    const double resid = nt > 0 ? (T * v0 - t).cwiseAbs().maxCoeff() : 0.0;
    const double tscale = nt > 0 ? std::max(1.0, t.cwiseAbs().maxCoeff()) : 1.0;
    if (resid > 1e-9 * tscale)
        throw InfeasibleTarget("target curvatures not in electrode basis span (residual " +
                               std::to_string(resid) + ")");

    Eigen::VectorXd v = v0;
    if (!nulls.empty()) {
        // remaining freedom: kernel of T (all of R^ne when no targets)
        Eigen::MatrixXd Z;
        if (nt > 0) {
            Eigen::FullPivLU<Eigen::MatrixXd> lu(T);
            Z = lu.kernel();
            if (lu.dimensionOfKernel() == 0) Z.resize(ne, 0);
        } else {
            Z = Eigen::MatrixXd::Identity(ne, ne);
        }
        if (Z.cols() > 0) {
            const int nn = static_cast<int>(nulls.size());
            Eigen::MatrixXd N(nn, ne);
            Eigen::VectorXd w(nn);
            for (int i = 0; i < nn; ++i) {
                N.row(i) = column(nulls[i].where).transpose();
                w(i) = std::sqrt(std::max(0.0, nulls[i].weight));
            }
            Eigen::MatrixXd A = w.asDiagonal() * N * Z;
            Eigen::VectorXd b = -(w.asDiagonal() * N * v0);
            Eigen::VectorXd y = A.completeOrthogonalDecomposition().solve(b);
            v = v0 + Z * y;
        }
    }

    AmplitudeSolution out;
    out.volts = v;
    out.target_residual = nt > 0 ? (T * v - t).cwiseAbs().maxCoeff() : 0.0;
    for (const auto& tg : targets) {
        AmplitudeSolution::Achieved a;
        a.where = tg.where;
        a.requested = tg.value;
        a.achieved = column(tg.where).dot(v);
        a.is_target = true;
        out.report.push_back(a);
    }
    for (const auto& nl : nulls) {
        AmplitudeSolution::Achieved a;
        a.where = nl.where;
        a.achieved = column(nl.where).dot(v);
        out.report.push_back(a);
    }
    return out;
}

double envelope_value(const PulseEnvelope& env, double t_us) {
    const double total = env.total_us();
    if (t_us < -1e-12 || t_us > total + 1e-12)
        throw OutOfRange("envelope time outside [0, " + std::to_string(total) + "] us");
    t_us = std::clamp(t_us, 0.0, total);
    auto ramp = [&](double t) {
        const double s = std::sin(phase_khz_us(env.ramp_freq_khz, t));
        return s * s;
    };
    if (t_us < env.ramp_time_us) return ramp(t_us);
    if (t_us <= env.ramp_time_us + env.flat_time_us) return 1.0;
    return ramp(total - t_us);
}

double filter_attenuation(const FilterModel& filter, double f_mhz) {
    if (f_mhz < 0.0) throw Error("filter frequency must be non-negative");
    if (filter.corner_freq_khz <= 0.0 || filter.stages < 1)
        throw Error("invalid filter model");
    const double x = f_mhz * 1e3 / filter.corner_freq_khz;
    return std::pow(1.0 + x * x, -0.5 * filter.stages);
}

void CouplingDrive::validate() const {
    if (g_khz < 0.0) throw Error("coupling rate must be non-negative");
    if (drive_freq_mhz <= 0.0) throw Error("drive frequency must be positive");
    if (mode_w == mode_s) throw Error("coupling drive needs two distinct modes");
}

namespace {

double json_number_or_nan(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) return std::nan("");
    return j.at(key).get<double>();
}

} // namespace

ElectrodeBasis load_electrode_basis(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open electrode basis file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw Error("electrode basis parse error: " + std::string(e.what()));
    }
    ElectrodeBasis basis;
    for (const auto& je : j.at("electrodes")) {
        ElectrodeBasis::Electrode e;
        e.id = je.at("id").get<int>();
        for (const auto& jx : je.at("expansions")) {
            FieldExpansion ex;
            if (jx.contains("at_um"))
                for (int i = 0; i < 3; ++i) ex.evaluation_point_um(i) = jx["at_um"][i].get<double>();
            if (jx.contains("gradient_v_per_m"))
                for (int i = 0; i < 3; ++i) ex.gradient(i) = jx["gradient_v_per_m"][i].get<double>();
            else
                ex.gradient.setConstant(std::nan(""));
            if (jx.contains("hessian_v_per_m2")) {
                for (int r = 0; r < 3; ++r)
                    for (int c = 0; c < 3; ++c)
                        ex.hessian(r, c) = jx["hessian_v_per_m2"][r][c].get<double>();
            } else {
                ex.hessian.setConstant(std::nan(""));
            }
            ex.third_axial = json_number_or_nan(jx, "third_axial_v_per_m3");
            ex.physical = jx.value("physical", true);
            e.at_ions.push_back(ex);
        }
        basis.electrodes.push_back(std::move(e));
    }
    basis.validate();
    return basis;
}

} // namespace paracool::fields
