#pragma once

// Boost converter parameters, droop laws and steady-state operating points.

#include <optional>
#include <string>
#include <string_view>

namespace dcpass {

/// Averaged boost converter fed from a battery through r_bat. Defaults are the
/// reference system (130 V source, 350 V no-load reference, 2 mH inductor).
struct ConverterParams {
    double E = 130.0;        // source voltage, V
    double r_bat = 0.03;     // source resistance, Ohm
    double L = 2e-3;         // inductance, H
    double r_f = 0.01;       // inductor ESR, Ohm
    double C_out = 3.3e-3;   // converter output capacitance, F
    double V_o = 350.0;      // global no-load voltage reference, V
    double f_sw = 20e3;      // switching frequency, Hz

    double series_resistance() const { return r_bat + r_f; }
    /// Throws std::invalid_argument naming the first violated invariant.
    void validate() const;
};

enum class DroopKind { IV, VI, PV, VP };

std::string_view to_string(DroopKind kind);
/// Throws std::invalid_argument for anything but "IV", "VI", "PV" or "VP".
DroopKind parse_droop_kind(std::string_view name);

/// True for VI/VP, whose droop output is a voltage reference for the outer voltage loop.
constexpr bool uses_voltage_loop(DroopKind kind) { return kind == DroopKind::VI || kind == DroopKind::VP; }
/// True for VP/PV, whose coefficient is in V/W.
constexpr bool is_power_droop(DroopKind kind) { return kind == DroopKind::VP || kind == DroopKind::PV; }

struct DroopSpec {
    DroopKind kind = DroopKind::VI;
    /// d (Ohm) for VI/IV, k (V/W) for VP/PV.
    double coefficient = 1.0;
    /// Cutoff of the first-order filter on the droop feedback; none = unfiltered.
    std::optional<double> lpf_cutoff;

    void validate() const;
    static DroopSpec table_default(DroopKind kind, std::optional<double> lpf_cutoff = std::nullopt);
};

struct OperatingPoint {
    DroopKind droop = DroopKind::VI;
    double v_bus = 0.0;   // converter terminal voltage, V
    double i_out = 0.0;   // converter output current, A
    double i_l = 0.0;     // inductor current, A
    double duty = 0.0;    // duty cycle
    double p_load = 0.0;  // power delivered to the load, W
    double v_load = 0.0;  // load-side voltage after the series line resistance, V

    double p_out() const { return v_bus * i_out; }
    /// True when the point is a physically meaningful solution.
    bool solved() const { return v_bus > 0.0 && duty > 0.0 && duty < 1.0 && i_l >= 0.0; }
};

/// Steady state of the droop law plus averaged power balance,
/// E i_l - i_l^2 (r_bat + r_f) = v_bus i_out with (1 - duty) i_l = i_out.
///
/// With line_resistance > 0 the load sits behind a series resistance, so the droop
/// sees p_load plus the line loss. The high-voltage branch is always returned.
/// Throws NoRealSolution when no solution has v_load > V_o / 2 and NonViableDuty
/// when the duty cycle leaves (0, 1).
OperatingPoint solve_operating_point(const ConverterParams& params, const DroopSpec& droop, double p_load,
                                     double line_resistance = 0.0);

}  // namespace dcpass
