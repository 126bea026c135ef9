#include "dcpass/plant.hpp"

#include "dcpass/errors.hpp"

#include <cmath>
#include <stdexcept>

namespace dcpass {

namespace {

void require_positive(double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument(std::string(name) + " must be strictly positive");
    }
}

// Smallest positive root of V_o i/(1 + k i) - R i^2 = P, i.e. the output current of a
// power droop feeding P through a series resistance R.
double power_droop_current(double V_o, double k, double R, double P) {
    const auto g = [&](double i) { return V_o * i / (1.0 + k * i) - R * i * i - P; };
    if (R == 0.0) {
        if (V_o - k * P <= 0.0) {
            throw NoRealSolution("power droop: load exceeds the droop's transferable power");
        }
        return P / (V_o - k * P);
    }
    // g is concave; locate its maximum first.
    double lo = 0.0;
    double hi = V_o / (2.0 * R);
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double slope = V_o / ((1.0 + k * mid) * (1.0 + k * mid)) - 2.0 * R * mid;
        (slope > 0.0 ? lo : hi) = mid;
    }
    const double i_peak = 0.5 * (lo + hi);
    if (g(i_peak) < 0.0) {
        throw NoRealSolution("power droop: load exceeds maximum transferable power through the line");
    }
    lo = 0.0;
    hi = i_peak;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

}  // namespace

void ConverterParams::validate() const {
    require_positive(E, "E");
    require_positive(r_bat, "r_bat");
    require_positive(L, "L");
    require_positive(r_f, "r_f");
    require_positive(C_out, "C_out");
    require_positive(V_o, "V_o");
    require_positive(f_sw, "f_sw");
    if (!(E < V_o)) {
        throw std::invalid_argument("boost operation requires E < V_o");
    }
}

std::string_view to_string(DroopKind kind) {
    switch (kind) {
        case DroopKind::IV: return "IV";
        case DroopKind::VI: return "VI";
        case DroopKind::PV: return "PV";
        case DroopKind::VP: return "VP";
    }
    return "?";
}

DroopKind parse_droop_kind(std::string_view name) {
    if (name == "IV") return DroopKind::IV;
    if (name == "VI") return DroopKind::VI;
    if (name == "PV") return DroopKind::PV;
    if (name == "VP") return DroopKind::VP;
    throw std::invalid_argument("unknown droop kind '" + std::string(name) + "' (expected IV, VI, PV or VP)");
}

void DroopSpec::validate() const {
    require_positive(coefficient, "droop coefficient");
    if (lpf_cutoff) {
        require_positive(*lpf_cutoff, "lpf_cutoff");
    }
}

DroopSpec DroopSpec::table_default(DroopKind kind, std::optional<double> lpf_cutoff) {
    return {kind, is_power_droop(kind) ? 10.0 / 3600.0 : 1.0, lpf_cutoff};
}

OperatingPoint solve_operating_point(const ConverterParams& params, const DroopSpec& droop, double p_load,
                                     double line_resistance) {
    params.validate();
    droop.validate();
    if (!(p_load >= 0.0) || !std::isfinite(p_load)) {
        throw std::invalid_argument("p_load must be non-negative");
    }
    if (!(line_resistance >= 0.0)) {
        throw std::invalid_argument("line_resistance must be non-negative");
    }
    const double V_o = params.V_o;
    const double R = line_resistance;

    OperatingPoint op;
    op.droop = droop.kind;
    op.p_load = p_load;

    if (is_power_droop(droop.kind)) {
        const double k = droop.coefficient;
        op.i_out = power_droop_current(V_o, k, R, p_load);
        op.v_bus = V_o / (1.0 + k * op.i_out);
    } else {
        // (d + R) i^2 - V_o i + P = 0, small-current (high-voltage) root.
        const double d = droop.coefficient;
        const double disc = V_o * V_o - 4.0 * (d + R) * p_load;
        if (!(disc > 0.0)) {
            throw NoRealSolution("current droop: load exceeds maximum transferable power");
        }
        op.i_out = 2.0 * p_load / (V_o + std::sqrt(disc));
        op.v_bus = V_o - d * op.i_out;
    }
    op.v_load = op.v_bus - R * op.i_out;
    if (!(op.v_load > 0.5 * V_o)) {
        throw NoRealSolution("operating point below V_o/2 (not on the high-voltage branch)");
    }

    // E i_l - r i_l^2 = P_out by fixed-point iteration on the efficient branch.
    const double r = params.series_resistance();
    const double p_out = op.p_out();
    if (params.E * params.E < 4.0 * r * p_out) {
        throw NoRealSolution("source cannot deliver the requested power through r_bat + r_f");
    }
    double i_l = p_out / params.E;
    bool converged = false;
    for (int it = 0; it < 100; ++it) {
        const double next = (p_out + r * i_l * i_l) / params.E;
        const double step = std::abs(next - i_l);
        i_l = next;
        if (step < 1e-12) {
            converged = true;
            break;
        }
    }
    if (!converged) {
        throw NoRealSolution("inductor-current iteration did not converge");
    }
    op.i_l = i_l;
    op.duty = 1.0 - (params.E - i_l * r) / op.v_bus;
    if (!(op.duty > 0.0 && op.duty < 1.0)) {
        throw NonViableDuty("duty cycle " + std::to_string(op.duty) + " outside (0, 1)");
    }
    return op;
}

}  // namespace dcpass
