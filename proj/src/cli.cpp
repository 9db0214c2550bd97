#include "paracool/cli.hpp"

#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "paracool/cooling.hpp"
#include "paracool/crystal.hpp"
#include "paracool/fitkit.hpp"
#include "paracool/spectro.hpp"

namespace paracool::cli {

namespace {

using nlohmann::json;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

std::uint64_t fnv1a64(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string hash_hex(const json& config, long long seed) {
    std::string canon = config.dump();
    canon += "|seed=" + std::to_string(seed);
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016" PRIx64, fnv1a64(canon));
    return buf;
}

void atomic_write(const std::string& path, const std::string& content) {
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write output file '" + path + "'");
        out << content;
    }
    std::filesystem::rename(tmp, path);
}

/// deterministic standard normals: Box-Muller over mt19937_64, independent of
/// library distribution internals
struct NoiseSource {
    std::mt19937_64 rng;
    explicit NoiseSource(std::uint64_t seed) : rng(seed) {}
    double uniform() {
        return (rng() >> 11) * 0x1.0p-53 + 0x1.0p-54;  // (0,1)
    }
    double gaussian() {
        const double u1 = uniform(), u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }
};

struct CsvWriter {
    std::ostringstream out;

    CsvWriter(const json& config, long long seed, const std::string& command) {
        out << "# paracool " << kToolVersion << "\n";
        out << "# config " << hash_hex(config, seed) << "\n";
        out << "# command " << command << "\n";
    }
    void comment(const std::string& s) { out << "# " << s << "\n"; }
    void header(const std::vector<std::string>& cols) {
        for (size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
        out << "\n";
    }
    void row(const std::vector<double>& vals, const std::string& lead = {}) {
        if (!lead.empty()) out << lead << (vals.empty() ? "" : ",");
        for (size_t i = 0; i < vals.size(); ++i) out << (i ? "," : "") << format_double(vals[i]);
        out << "\n";
    }
};

json result_envelope(const json& config, long long seed) {
    json j;
    j["tool_version"] = kToolVersion;
    j["config_hash"] = hash_hex(config, seed);
    return j;
}

// ---- config helpers -------------------------------------------------------

[[noreturn]] void config_fail(const std::string& msg) { throw ConfigError(msg); }

const json& need(const json& j, const char* key, const char* ctx) {
    if (!j.contains(key)) config_fail(std::string(ctx) + ": missing required key '" + key + "'");
    return j.at(key);
}

double need_num(const json& j, const char* key, const char* ctx) {
    const json& v = need(j, key, ctx);
    if (!v.is_number()) config_fail(std::string(ctx) + ": '" + key + "' must be a number");
    return v.get<double>();
}

std::map<std::string, IonSpecies> species_registry(const json& config) {
    std::map<std::string, IonSpecies> reg;
    for (const IonSpecies& s : {beryllium9(), magnesium25()}) reg[s.label] = s;
    if (config.contains("species")) {
        for (auto it = config["species"].begin(); it != config["species"].end(); ++it) {
            IonSpecies s;
            s.label = it.key();
            s.mass_amu = need_num(it.value(), "mass_amu", "species");
            s.charge = it.value().value("charge", 1);
            reg[s.label] = s;
        }
    }
    return reg;
}

crystal::TrapConfig parse_trap(const json& config) {
    const json& jt = need(config, "trap", "config");
    const auto reg = species_registry(config);
    const std::string ref = need(jt, "reference_species", "trap").get<std::string>();
    if (!reg.count(ref)) config_fail("trap: unknown reference species '" + ref + "'");
    crystal::TrapConfig trap;
    trap.reference = reg.at(ref);
    trap.axial_freq_ref_mhz = need_num(jt, "axial_freq_ref_mhz", "trap");
    trap.radial_pseudo_freq_x_ref_mhz = need_num(jt, "radial_pseudo_freq_x_ref_mhz", "trap");
    trap.radial_pseudo_freq_y_ref_mhz = need_num(jt, "radial_pseudo_freq_y_ref_mhz", "trap");
    return trap;
}

crystal::CrystalConfig parse_crystal(const json& config) {
    const json& jc = need(config, "crystal", "config");
    const json& order = need(jc, "species_order", "crystal");
    if (!order.is_array() || order.empty()) config_fail("species_order must be non-empty");
    const auto reg = species_registry(config);
    crystal::CrystalConfig cc;
    for (const auto& name : order) {
        const std::string label = name.get<std::string>();
        if (!reg.count(label)) config_fail("crystal: unknown species '" + label + "'");
        cc.species.push_back(reg.at(label));
    }
    return cc;
}

struct Grid {
    double start = 0.0, stop = 0.0;
    int points = 1;

    double at(int i) const {
        if (points <= 1) return start;
        return start + (stop - start) * i / (points - 1);
    }
};

Grid parse_grid(const json& j, const char* ctx) {
    const json& g = need(j, "grid", ctx);
    Grid grid;
    grid.start = need_num(g, "start", ctx);
    grid.stop = need_num(g, "stop", ctx);
    grid.points = g.value("points", 1);
    if (grid.points < 1) config_fail(std::string(ctx) + ": grid points must be >= 1");
    if (grid.points > 1 && !(grid.stop > grid.start))
        config_fail(std::string(ctx) + ": grid needs stop > start for points > 1");
    return grid;
}

exchange::ExchangeParams parse_exchange(const json& j, const char* ctx) {
    exchange::ExchangeParams p;
    p.g_khz = need_num(j, "g_khz", ctx);
    p.detuning_khz = j.value("detuning_khz", 0.0);
    p.drive_phase = j.value("drive_phase", 0.0);
    return p;
}

spectro::KerrSpectrumParams parse_kerr(const json& j) {
    spectro::KerrSpectrumParams p;
    p.amplitude = need_num(j, "amplitude", "kerr");
    p.f_rsb_mhz = need_num(j, "f_rsb_mhz", "kerr");
    p.offset = j.value("offset", 0.0);
    p.chi_zs_xr_hz = need_num(j, "chi_zs_xr_hz", "kerr");
    p.chi_zs_yr_hz = need_num(j, "chi_zs_yr_hz", "kerr");
    p.nbar_zs = j.value("nbar_zs", 0.0);
    p.nbar_xr = j.value("nbar_xr", 0.0);
    p.nbar_yr = j.value("nbar_yr", 0.0);
    p.n_max_zs = j.value("n_max_zs", 5);
    p.n_max_xr = j.value("n_max_xr", 20);
    p.n_max_yr = j.value("n_max_yr", 20);
    p.rabi.carrier_khz = need_num(j, "carrier_khz", "kerr");
    p.rabi.eta = j.value("eta", 0.268);
    p.rabi.exponent_negative = j.value("lamb_dicke_exponent_negative", true);
    p.normalized_weights = j.value("normalized_weights", true);
    return p;
}

cooling::ModeRatesMap parse_mode_rates(const json& config) {
    const json& jm = need(config, "modes", "cool");
    cooling::ModeRatesMap rates;
    for (auto it = jm.begin(); it != jm.end(); ++it) {
        cooling::ModeRates r;
        r.heating_rate_per_s = it.value().value("heating_rate_per_s", 0.0);
        r.csbc_rate_per_s = it.value().value("csbc_rate_per_s", 0.0);
        r.cooling_floor = it.value().value("cooling_floor", 0.0);
        r.second_order_rate_per_s = it.value().value("second_order_rate_per_s", 0.0);
        rates[it.key()] = r;
    }
    if (rates.empty()) config_fail("cool: 'modes' must define at least one mode");
    return rates;
}

cooling::ContinuousCoolingParams parse_continuous_params(const json& j) {
    cooling::ContinuousCoolingParams p;
    p.kappa0_per_s = j.value("kappa0_per_s", 0.0);
    p.linewidth_khz = j.value("linewidth_khz", 0.0);
    p.delta_k_per_m = j.value("delta_k_per_m", 0.0);
    p.beta_nm_per_khz = j.value("beta_nm_per_khz", 0.0);
    return p;
}

std::vector<cooling::ScheduleElement> parse_elements(const json& arr);

cooling::ScheduleElement parse_element(const json& je) {
    const std::string type = need(je, "type", "schedule element").get<std::string>();
    if (type == "csbc") {
        cooling::CsbcPulse e;
        e.mode = need(je, "mode", "csbc").get<std::string>();
        e.duration_us = need_num(je, "duration_us", "csbc");
        e.order = je.value("order", 1);
        return e;
    }
    if (type == "swap") {
        cooling::SwapPulse e;
        e.mode_a = need(je, "mode_a", "swap").get<std::string>();
        e.mode_b = need(je, "mode_b", "swap").get<std::string>();
        e.duration_us = need_num(je, "duration_us", "swap");
        e.fidelity = je.value("fidelity", 0.99);
        return e;
    }
    if (type == "delay") {
        cooling::Delay e;
        e.duration_us = need_num(je, "duration_us", "delay");
        return e;
    }
    if (type == "simultaneous") {
        cooling::SimultaneousCool e;
        e.wcm = need(je, "wcm", "simultaneous").get<std::string>();
        e.scm = need(je, "scm", "simultaneous").get<std::string>();
        e.g_khz = need_num(je, "g_khz", "simultaneous");
        e.duration_us = need_num(je, "duration_us", "simultaneous");
        e.params = parse_continuous_params(je);
        return e;
    }
    if (type == "trap_ramp") {
        cooling::TrapRamp e;
        e.note = je.value("note", "");
        return e;
    }
    if (type == "repeat") {
        cooling::Repeat e;
        e.count = je.value("count", 1);
        e.block = parse_elements(need(je, "block", "repeat"));
        return e;
    }
    config_fail("unknown schedule element type '" + type + "'");
}

std::vector<cooling::ScheduleElement> parse_elements(const json& arr) {
    if (!arr.is_array()) config_fail("schedule must be an array of elements");
    std::vector<cooling::ScheduleElement> out;
    for (const auto& je : arr) out.push_back(parse_element(je));
    return out;
}

fitkit::ScanData load_scan_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) config_fail("cannot open data file '" + path + "'");
    std::string line;
    std::vector<std::string> cols;
    std::vector<double> xs, ys, ss;
    bool have_header = false;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> parts;
        std::stringstream split(line);
        std::string tok;
        while (std::getline(split, tok, ',')) parts.push_back(tok);
        if (!have_header) {
            cols = parts;
            if (cols.size() < 3 || cols[0] != "x" || cols[1] != "y" || cols[2] != "sigma")
                config_fail("data file '" + path +
                            "' must start with header 'x,y,sigma' (line " +
                            std::to_string(lineno) + ")");
            have_header = true;
            continue;
        }
        if (parts.size() < 3)
            config_fail("data row with fewer than 3 columns at line " + std::to_string(lineno));
        try {
            xs.push_back(std::stod(parts[0]));
            ys.push_back(std::stod(parts[1]));
            ss.push_back(std::stod(parts[2]));
        } catch (const std::exception&) {
            config_fail("non-numeric data at line " + std::to_string(lineno));
        }
    }
    if (!have_header) config_fail("data file '" + path + "' is empty or lacks a header");
    fitkit::ScanData d;
    d.x = Eigen::Map<Eigen::VectorXd>(xs.data(), xs.size());
    d.y = Eigen::Map<Eigen::VectorXd>(ys.data(), ys.size());
    d.sigma = Eigen::Map<Eigen::VectorXd>(ss.data(), ss.size());
    d.metadata = path;
    return d;
}

// ---- commands -------------------------------------------------------------

int cmd_modes(const json& config, const std::string& out_path, long long seed) {
    const auto trap = parse_trap(config);
    const auto crystal_cfg = parse_crystal(config);
    const auto table = crystal::mode_table(crystal_cfg, trap);

    CsvWriter csv(config, seed, "modes");
    std::string pos = "equilibrium_um";
    for (int j = 0; j < table.equilibrium_um.size(); ++j)
        pos += " " + format_double(table.equilibrium_um(j));
    csv.comment(pos);
    std::vector<std::string> cols{"label", "axis", "frequency_mhz"};
    for (int j = 0; j < crystal_cfg.size(); ++j) cols.push_back("xi_" + std::to_string(j + 1));
    csv.header(cols);
    for (const auto& m : table.modes) {
        std::vector<double> vals{m.frequency_mhz};
        for (int j = 0; j < m.participation.size(); ++j) vals.push_back(m.participation(j));
        const std::string name = m.alias.empty() ? m.label : m.alias;
        csv.row(vals, name + "," + std::string(1, crystal::axis_letter(m.axis)));
    }
    atomic_write(out_path, csv.out.str());
    return kExitOk;
}

int cmd_couple_scan(const json& config, const std::string& out_path, long long seed,
                    bool seed_given) {
    const json& js = need(config, "scan", "couple-scan");
    const std::string obs = need(js, "observable", "scan").get<std::string>();
    const Grid grid = parse_grid(js, "scan");

    const bool noisy = js.contains("noise_sigma");
    const double noise_sigma = noisy ? js["noise_sigma"].get<double>() : 0.0;
    if (noisy && !seed_given) config_fail("couple-scan: noise requested without a seed");
    NoiseSource noise(static_cast<std::uint64_t>(seed));

    CsvWriter csv(config, seed, "couple-scan");
    std::vector<std::string> cols;
    std::vector<std::vector<double>> rows;

    auto x_label = [&]() -> std::string {
        const std::string ax = js.value("scan_over", "");
        if (obs == "freq_scan") return "delta_mhz";
        if (obs == "time_scan") return "tau_us";
        return ax.empty() ? "duration_us" : ax;
    };

    if (obs == "freq_scan") {
        spectro::FreqScanParams p;
        const json& jp = need(js, "freq_scan", "scan");
        p.amplitude = need_num(jp, "amplitude", "freq_scan");
        p.r0_khz = need_num(jp, "r0_khz", "freq_scan");
        p.tau_us = need_num(jp, "tau_us", "freq_scan");
        p.delta_ws_mhz = need_num(jp, "delta_ws_mhz", "freq_scan");
        p.offset = need_num(jp, "offset", "freq_scan");
        p.validate();
        cols = {x_label(), "value"};
        for (int i = 0; i < grid.points; ++i)
            rows.push_back({grid.at(i), spectro::freq_scan_model(p, grid.at(i))});
    } else if (obs == "time_scan") {
        spectro::TimeScanParams p;
        const json& jp = need(js, "time_scan", "scan");
        p.amplitude = need_num(jp, "amplitude", "time_scan");
        p.r0_khz = need_num(jp, "r0_khz", "time_scan");
        p.phase = need_num(jp, "phase", "time_scan");
        p.gamma_per_ms = need_num(jp, "gamma_per_ms", "time_scan");
        p.offset = need_num(jp, "offset", "time_scan");
        p.validate();
        cols = {x_label(), "value"};
        for (int i = 0; i < grid.points; ++i)
            rows.push_back({grid.at(i), spectro::time_scan_model(p, grid.at(i))});
    } else if (obs == "single_phonon" || obs == "dark_counts") {
        exchange::ExchangeParams base = parse_exchange(need(js, "exchange", "scan"), "exchange");
        const std::string over = js.value("scan_over", "duration_us");
        const bool over_time = over == "duration_us";
        if (!over_time && over != "detuning_khz")
            config_fail("scan_over must be 'duration_us' or 'detuning_khz'");
        const double fixed_t = over_time ? 0.0 : need_num(js, "fixed_duration_us", "scan");

        if (obs == "single_phonon") {
            cols = {x_label(), "p10", "p01"};
            for (int i = 0; i < grid.points; ++i) {
                exchange::ExchangeParams p = base;
                double t = fixed_t;
                if (over_time)
                    t = grid.at(i);
                else
                    p.detuning_khz = grid.at(i);
                const auto [p10, p01] = spectro::single_phonon_transfer(p, t);
                rows.push_back({grid.at(i), p10, p01});
            }
        } else {
            const bool exact = js.value("exact", true);
            cols = {x_label(), "dark_w", "dark_s"};
            for (int i = 0; i < grid.points; ++i) {
                exchange::ExchangeParams p = base;
                double t = fixed_t;
                if (over_time)
                    t = grid.at(i);
                else
                    p.detuning_khz = grid.at(i);
                rows.push_back(
                    {grid.at(i),
                     spectro::two_ion_dark_counts(p, t, spectro::WhichMode::W, exact),
                     spectro::two_ion_dark_counts(p, t, spectro::WhichMode::S, exact)});
            }
        }
    } else {
        config_fail("unknown scan observable '" + obs + "'");
    }

    if (js.value("as_fit_data", false)) {
        // emit directly in the fit command's x,y,sigma schema
        if (!noisy) config_fail("couple-scan: as_fit_data requires noise_sigma");
        csv.header({"x", "y", "sigma"});
        for (auto& r : rows)
            csv.row({r[0], r[1] + noise_sigma * noise.gaussian(), noise_sigma});
        atomic_write(out_path, csv.out.str());
        return kExitOk;
    }

    if (noisy) cols.push_back("noisy");
    csv.header(cols);
    for (auto& r : rows) {
        if (noisy) r.push_back(r[1] + noise_sigma * noise.gaussian());
        csv.row(r);
    }
    atomic_write(out_path, csv.out.str());
    return kExitOk;
}

int cmd_cool(const json& config, const std::string& out_path, long long seed) {
    json summary = result_envelope(config, seed);

    if (config.contains("continuous")) {
        const json& jc = config["continuous"];
        cooling::ModeRates wcm, scm;
        const json& jw = need(jc, "wcm", "continuous");
        const json& jsmode = need(jc, "scm", "continuous");
        wcm.heating_rate_per_s = jw.value("heating_rate_per_s", 0.0);
        wcm.cooling_floor = jw.value("cooling_floor", 0.0);
        scm.heating_rate_per_s = jsmode.value("heating_rate_per_s", 0.0);
        scm.cooling_floor = jsmode.value("cooling_floor", 0.0);
        const auto params = parse_continuous_params(jc);
        if (params.kappa0_per_s <= 0.0) config_fail("continuous: kappa0_per_s must be positive");
        exchange::MomentState init;
        init.nbar_w = need_num(need(jc, "initial", "continuous"), "nbar_w", "initial");
        init.nbar_s = need_num(jc["initial"], "nbar_s", "initial");
        const double duration = need_num(jc, "duration_us", "continuous");
        if (duration <= 0.0) config_fail("continuous: duration_us must be positive");

        CsvWriter csv(config, seed, "cool");
        if (jc.contains("r0_sweep_khz")) {
            Grid sweep;
            const json& g = jc["r0_sweep_khz"];
            sweep.start = need_num(g, "start", "r0_sweep_khz");
            sweep.stop = need_num(g, "stop", "r0_sweep_khz");
            sweep.points = g.value("points", 1);
            if (sweep.points < 1) config_fail("r0_sweep_khz: points must be >= 1");
            csv.header({"r0_khz", "final_nbar_wcm", "final_nbar_scm"});
            double best_r0 = 0.0, best_n = std::numeric_limits<double>::infinity();
            for (int i = 0; i < sweep.points; ++i) {
                const double r0 = sweep.at(i);
                const auto traj =
                    cooling::continuous_cool(init, 0.5 * r0, wcm, scm, params, duration, 1);
                const auto& fin = traj.states.back();
                csv.row({r0, fin.nbar_w, fin.nbar_s});
                if (fin.nbar_w < best_n) {
                    best_n = fin.nbar_w;
                    best_r0 = r0;
                }
            }
            summary["optimum_r0_khz"] = best_r0;
            summary["optimum_final_nbar_wcm"] = best_n;
        } else {
            const double r0 = need_num(jc, "r0_khz", "continuous");
            const auto traj =
                cooling::continuous_cool(init, 0.5 * r0, wcm, scm, params, duration, 256);
            csv.header({"time_us", "nbar_wcm", "nbar_scm"});
            for (size_t i = 0; i < traj.t_us.size(); ++i)
                csv.row({traj.t_us[i], traj.states[i].nbar_w, traj.states[i].nbar_s});
            summary["final"] = {{"nbar_wcm", traj.states.back().nbar_w},
                                {"nbar_scm", traj.states.back().nbar_s}};
            try {
                const auto ss = cooling::continuous_steady_state(0.5 * r0, wcm, scm, params);
                summary["steady_state"] = {{"nbar_wcm", ss.nbar_w}, {"nbar_scm", ss.nbar_s}};
            } catch (const NoSteadyState&) {
                summary["steady_state"] = nullptr;
            }
        }
        atomic_write(out_path, csv.out.str());
        atomic_write(out_path + ".summary.json", summary.dump(2) + "\n");
        return kExitOk;
    }

    const auto rates = parse_mode_rates(config);
    cooling::Schedule schedule{parse_elements(need(config, "schedule", "cool"))};
    cooling::ModeOccupations initial;
    const json& ji = need(config, "initial_nbar", "cool");
    for (auto it = ji.begin(); it != ji.end(); ++it) initial[it.key()] = it.value().get<double>();
    const int samples = config.value("samples_per_element", 4);

    const auto traj = cooling::run_schedule(schedule, initial, rates, samples);

    CsvWriter csv(config, seed, "cool");
    std::vector<std::string> cols{"time_us"};
    for (const auto& m : traj.mode_names) cols.push_back("nbar_" + m);
    csv.header(cols);
    for (size_t i = 0; i < traj.t_us.size(); ++i) {
        std::vector<double> row{traj.t_us[i]};
        for (const auto& m : traj.mode_names) row.push_back(traj.nbar[i].at(m));
        csv.row(row);
    }

    json jfinal;
    for (const auto& [k, v] : traj.final()) jfinal[k] = v;
    summary["final"] = jfinal;
    try {
        const auto fix = cooling::pulsed_steady_state(schedule, rates, traj.mode_names);
        json jss;
        for (const auto& [k, v] : fix) jss[k] = v;
        summary["steady_state"] = jss;
    } catch (const NoSteadyState&) {
        summary["steady_state"] = nullptr;
    }
    atomic_write(out_path, csv.out.str());
    atomic_write(out_path + ".summary.json", summary.dump(2) + "\n");
    return kExitOk;
}

int cmd_spectrum(const json& config, const std::string& out_path, long long seed) {
    const std::string model = need(config, "model", "spectrum").get<std::string>();
    CsvWriter csv(config, seed, "spectrum");
    if (model == "kerr") {
        const auto p = parse_kerr(need(config, "kerr", "spectrum"));
        const Grid grid = parse_grid(config, "spectrum");  // offsets from f_rsb, Hz
        const double coverage = p.weight_coverage();
        if (coverage < 0.999)
            csv.comment("warning: thermal-weight coverage " + format_double(coverage) +
                        " below 0.999; raise truncations");
        csv.header({"f_offset_hz", "f_mhz", "dark_zs"});
        for (int i = 0; i < grid.points; ++i) {
            const double off = grid.at(i);
            const double f = p.f_rsb_mhz + off * 1e-6;
            csv.row({off, f, spectro::kerr_spectrum(p, f)});
        }
    } else if (model == "bessel") {
        const json& jb = need(config, "bessel", "spectrum");
        const double dk = need_num(jb, "delta_k_per_m", "bessel");
        const double beta = need_num(jb, "beta_nm_per_khz", "bessel");
        const Grid grid = parse_grid(config, "spectrum");  // r0 in kHz
        csv.header({"r0_khz", "rabi_ratio"});
        for (int i = 0; i < grid.points; ++i)
            csv.row({grid.at(i), spectro::bessel_suppression(dk, beta, grid.at(i))});
    } else {
        config_fail("unknown spectrum model '" + model + "'");
    }
    atomic_write(out_path, csv.out.str());
    return kExitOk;
}

int cmd_fit(const json& config, const std::string& out_path, long long seed) {
    const std::string model_name = need(config, "model", "fit").get<std::string>();
    const std::string data_path = need(config, "data_csv", "fit").get<std::string>();
    const fitkit::ScanData data = load_scan_csv(data_path);

    fitkit::FitResult result;
    if (model_name == "kerr_occupations") {
        auto fixed = parse_kerr(need(config, "kerr", "fit"));
        const json& jg = need(config, "guess", "fit");
        fitkit::FitOptions opt;
        opt.throw_on_failure = false;
        spectro::KerrSpectrumParams base = fixed;
        fitkit::ModelFn fn = [base](double x, const Eigen::VectorXd& p) {
            spectro::KerrSpectrumParams k = base;
            k.nbar_xr = p(0);
            k.nbar_yr = p(1);
            return spectro::kerr_spectrum(k, x);
        };
        opt.lower = Eigen::Vector2d(0.0, 0.0);
        Eigen::VectorXd guess(2);
        guess << jg.value("nbar_xr", 1.0), jg.value("nbar_yr", 1.0);
        result = fitkit::fit_model(data, fn, {"nbar_xr", "nbar_yr"}, guess, opt);
    } else {
        const auto nm = fitkit::named_model(model_name);
        const json& jg = need(config, "guess", "fit");
        Eigen::VectorXd guess(nm.param_names.size());
        for (size_t i = 0; i < nm.param_names.size(); ++i)
            guess(i) = need_num(jg, nm.param_names[i].c_str(), "guess");
        fitkit::FitOptions opt;
        opt.throw_on_failure = false;
        if (config.contains("bounds")) {
            const json& jb = config["bounds"];
            opt.lower = Eigen::VectorXd::Constant(guess.size(),
                                                  -std::numeric_limits<double>::infinity());
            opt.upper = Eigen::VectorXd::Constant(guess.size(),
                                                  std::numeric_limits<double>::infinity());
            for (size_t i = 0; i < nm.param_names.size(); ++i) {
                if (jb.contains(nm.param_names[i])) {
                    opt.lower(i) = jb[nm.param_names[i]][0].get<double>();
                    opt.upper(i) = jb[nm.param_names[i]][1].get<double>();
                }
            }
        }
        result = fitkit::fit_model(data, nm.fn, nm.param_names, guess, opt);
        fitkit::gauge_fix(model_name, result.params);
    }

    json out = result_envelope(config, seed);
    out["model"] = model_name;
    out["converged"] = result.converged;
    out["chi2_reduced"] = result.chi2_reduced;
    out["iterations"] = result.iterations;
    json params, conf;
    for (size_t i = 0; i < result.names.size(); ++i) {
        params[result.names[i]] = result.params(static_cast<int>(i));
        conf[result.names[i]] = result.confidence_68(static_cast<int>(i));
    }
    out["params"] = params;
    out["confidence_68"] = conf;
    json cov = json::array();
    for (int i = 0; i < result.covariance.rows(); ++i) {
        json row = json::array();
        for (int j = 0; j < result.covariance.cols(); ++j) row.push_back(result.covariance(i, j));
        cov.push_back(row);
    }
    out["covariance"] = cov;
    atomic_write(out_path, out.dump(2) + "\n");
    return result.converged ? kExitOk : kExitNoConvergence;
}

int dispatch(const json& config, const std::optional<std::string>& out_override,
             const std::optional<long long>& seed_override) {
    const std::string command = need(config, "command", "config").get<std::string>();
    std::string out_path;
    if (out_override)
        out_path = *out_override;
    else if (config.contains("out"))
        out_path = config["out"].get<std::string>();
    else
        config_fail("no output path: pass --out or set \"out\" in the config");

    long long seed = 0;
    bool seed_given = false;
    if (seed_override) {
        seed = *seed_override;
        seed_given = true;
    } else if (config.contains("seed")) {
        seed = config["seed"].get<long long>();
        seed_given = true;
    }

    if (command == "modes") return cmd_modes(config, out_path, seed);
    if (command == "couple-scan") return cmd_couple_scan(config, out_path, seed, seed_given);
    if (command == "cool") return cmd_cool(config, out_path, seed);
    if (command == "spectrum") return cmd_spectrum(config, out_path, seed);
    if (command == "fit") return cmd_fit(config, out_path, seed);
    config_fail("unknown command '" + command + "'");
}

} // namespace

int run_config_text(const std::string& config_json,
                    const std::optional<std::string>& out_override,
                    const std::optional<long long>& seed_override) {
    json config;
    try {
        config = json::parse(config_json);
    } catch (const std::exception& e) {
        std::cerr << "error: config is not valid JSON: " << e.what() << "\n";
        return kExitConfig;
    }
    try {
        return dispatch(config, out_override, seed_override);
    } catch (const NoConvergence& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNoConvergence;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const json::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitConfig;
    }
}

int run_config_file(const std::string& config_path,
                    const std::optional<std::string>& out_override,
                    const std::optional<long long>& seed_override) {
    std::ifstream in(config_path);
    if (!in) {
        std::cerr << "error: cannot open config file '" << config_path << "'\n";
        return kExitConfig;
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return run_config_text(ss.str(), out_override, seed_override);
}

} // namespace paracool::cli
