#include "dcpass/network.hpp"

#include "dcpass/errors.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dcpass {

void LineParams::validate() const {
    if (!(r_per_m >= 0.0)) throw std::invalid_argument("line resistance per metre must be >= 0");
    if (!(l_per_m >= 0.0)) throw std::invalid_argument("line inductance per metre must be >= 0");
    if (!(length_m > 0.0)) throw std::invalid_argument("line length must be > 0");
}

RationalTF line_impedance(const LineParams& line) {
    line.validate();
    return RationalTF::from_coefficients({line.resistance(), line.inductance()}, {1.0});
}

RationalTF cpl_impedance(const CPLParams& cpl) {
    if (!(cpl.p > 0.0)) throw std::invalid_argument("constant-power load must draw p > 0");
    if (!(cpl.v_op > 0.0)) throw std::invalid_argument("constant-power load voltage must be > 0");
    return RationalTF::constant(-cpl.v_op * cpl.v_op / cpl.p);
}

RationalTF bus_capacitor_impedance(double c) {
    if (!(c > 0.0)) throw std::invalid_argument("bus capacitance must be > 0");
    return RationalTF::from_coefficients({1.0}, {0.0, c});
}

RationalTF bus_impedance(const std::vector<RationalTF>& members) {
    if (members.empty()) throw std::invalid_argument("bus has no members");
    RationalTF z = members.front();
    for (std::size_t i = 1; i < members.size(); ++i) z = tf_parallel(z, members[i]);
    return z;
}

std::vector<RationalTF> single_converter_bus_members(const RationalTF& z_conv, const LineParams& line, double c_bus,
                                                     const std::optional<CPLParams>& cpl) {
    std::vector<RationalTF> members{z_conv + line_impedance(line), bus_capacitor_impedance(c_bus)};
    if (cpl) members.push_back(cpl_impedance(*cpl));
    return members;
}

PassivityReport system_passivity_check(const RationalTF& z_bus, const std::vector<double>& grid,
                                       double tolerance_deg) {
    return assess_passivity(z_bus, grid, 0.0, tolerance_deg);
}

void MicrogridScenario::validate() const {
    converter.validate();
    droop.validate();
    line.validate();
    loops.validate(converter.f_sw);
    if (!(c_bus > 0.0)) throw std::invalid_argument("bus capacitance must be > 0");
    if (!(p_load >= 0.0)) throw std::invalid_argument("load power must be >= 0");
    if (!(p_design > 0.0)) throw std::invalid_argument("design load power must be > 0");
}

MicrogridModel build_microgrid(const MicrogridScenario& scenario) {
    scenario.validate();
    MicrogridModel m;
    const OperatingPoint design_op = solve_operating_point(scenario.converter, scenario.droop, scenario.p_design);
    m.controllers = design_controllers(scenario.converter, design_op, scenario.loops);
    m.op = solve_operating_point(scenario.converter, scenario.droop, scenario.p_load, scenario.line.resistance());
    m.converter = analytic_output_impedance(scenario.converter, scenario.droop, m.op, m.controllers);
    if (scenario.p_load > 0.0) m.cpl = CPLParams{scenario.p_load, m.op.v_load};
    m.z_bus = bus_impedance(single_converter_bus_members(m.converter.z, scenario.line, scenario.c_bus, m.cpl));
    return m;
}

namespace {

bool bus_passes(const MicrogridScenario& base, std::optional<double> cutoff, const std::vector<double>& grid,
                double tolerance_deg) {
    MicrogridScenario sc = base;
    sc.droop.lpf_cutoff = cutoff;
    return system_passivity_check(build_microgrid(sc).z_bus, grid, tolerance_deg).passed();
}

}  // namespace

MinLpfResult min_lpf_for_passivity(const MicrogridScenario& scenario, std::vector<std::optional<double>> candidates,
                                   const std::vector<double>& grid, double tolerance_deg) {
    // nullopt sorts first, then the highest cutoff.
    std::sort(candidates.begin(), candidates.end(), [](const auto& a, const auto& b) {
        if (!a || !b) return !a && b;
        return *a > *b;
    });
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    MinLpfResult r;
    for (const auto& fc : candidates) {
        r.tried.push_back(fc);
        if (bus_passes(scenario, fc, grid, tolerance_deg)) {
            r.outcome = fc ? MinLpfOutcome::Found : MinLpfOutcome::NotNeeded;
            r.cutoff_hz = fc;
            return r;
        }
    }
    r.outcome = MinLpfOutcome::NoCandidatePasses;
    return r;
}

MinLpfResult min_lpf_bisect(const MicrogridScenario& scenario, double f_lo, double f_hi, double rel_tol,
                            const std::vector<double>& grid, double tolerance_deg) {
    if (!(f_lo > 0.0 && f_hi > f_lo && rel_tol > 0.0)) throw std::invalid_argument("invalid bisection bracket");
    MinLpfResult r;
    r.tried.push_back(std::nullopt);
    if (bus_passes(scenario, std::nullopt, grid, tolerance_deg)) {
        r.outcome = MinLpfOutcome::NotNeeded;
        return r;
    }
    r.tried.push_back(f_hi);
    if (bus_passes(scenario, f_hi, grid, tolerance_deg)) {
        r.outcome = MinLpfOutcome::Found;
        r.cutoff_hz = f_hi;
        return r;
    }
    r.tried.push_back(f_lo);
    if (!bus_passes(scenario, f_lo, grid, tolerance_deg)) {
        r.outcome = MinLpfOutcome::NoCandidatePasses;
        return r;
    }
    double pass = f_lo, fail = f_hi;
    while (fail - pass > rel_tol * pass) {
        const double mid = std::sqrt(pass * fail);
        r.tried.push_back(mid);
        (bus_passes(scenario, mid, grid, tolerance_deg) ? pass : fail) = mid;
    }
    r.outcome = MinLpfOutcome::Found;
    r.cutoff_hz = pass;
    return r;
}

}  // namespace dcpass
