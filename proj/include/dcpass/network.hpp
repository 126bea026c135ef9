#pragma once

// DC bus of the single-converter microgrid: converter behind an RL line, a bus
// capacitor and a constant-power load, folded into one bus impedance.

#include "dcpass/control.hpp"
#include "dcpass/droop_impedance.hpp"
#include "dcpass/passivity.hpp"
#include "dcpass/plant.hpp"
#include "dcpass/ratfun.hpp"

#include <optional>
#include <vector>

namespace dcpass {

struct LineParams {
    double r_per_m = 0.01;    // Ohm/m
    double l_per_m = 10e-6;   // H/m
    double length_m = 29.0;

    double resistance() const { return r_per_m * length_m; }
    double inductance() const { return l_per_m * length_m; }
    void validate() const;
};

struct CPLParams {
    double p = 3600.0;    // W
    double v_op = 350.0;  // linearization voltage, V
};

/// r + l s
RationalTF line_impedance(const LineParams& line);
/// -v_op^2 / p. Throws std::invalid_argument for p <= 0 or v_op <= 0.
RationalTF cpl_impedance(const CPLParams& cpl);
/// 1 / (s c). Throws std::invalid_argument for c <= 0.
RationalTF bus_capacitor_impedance(double c);

/// Parallel fold of impedances meeting at one bus. Throws std::invalid_argument
/// on an empty list and DegenerateParallel from a degenerate pair.
RationalTF bus_impedance(const std::vector<RationalTF>& members);

/// Members of the single-converter bus: (z_conv + z_line), 1/(s c_bus) and, when
/// a load is present, the linearized constant-power load.
std::vector<RationalTF> single_converter_bus_members(const RationalTF& z_conv, const LineParams& line, double c_bus,
                                                     const std::optional<CPLParams>& cpl);

inline constexpr double kDefaultBusToleranceDeg = 0.5;

/// Bus-level check, threshold 0 Hz: any non-passive band fails.
PassivityReport system_passivity_check(const RationalTF& z_bus, const std::vector<double>& grid,
                                       double tolerance_deg = kDefaultBusToleranceDeg);

/// One operating scenario of the microgrid.
struct MicrogridScenario {
    ConverterParams converter;
    DroopSpec droop;
    LineParams line;
    double c_bus = 3.3e-3;      // F
    double p_load = 3600.0;     // W
    /// Controllers are designed once at this load with no line and reused everywhere.
    double p_design = 3600.0;   // W
    LoopBandwidths loops;

    void validate() const;
};

struct MicrogridModel {
    OperatingPoint op;        // loaded, with the line
    ControllerSet controllers;
    ConverterImpedanceModel converter;
    std::optional<CPLParams> cpl;
    RationalTF z_bus;
};

MicrogridModel build_microgrid(const MicrogridScenario& scenario);

enum class MinLpfOutcome { NotNeeded, Found, NoCandidatePasses };

struct MinLpfResult {
    MinLpfOutcome outcome = MinLpfOutcome::NoCandidatePasses;
    std::optional<double> cutoff_hz;   // set only for Found
    std::vector<std::optional<double>> tried;  // configurations evaluated, in order
};

/// Linear scan, lightest filtering first: the unfiltered droop (an empty entry, when
/// listed), then the cutoffs in descending order. Reports the first configuration whose
/// bus passes: NotNeeded for the unfiltered droop, Found with the cutoff otherwise.
MinLpfResult min_lpf_for_passivity(const MicrogridScenario& scenario, std::vector<std::optional<double>> candidates,
                                   const std::vector<double>& grid, double tolerance_deg = kDefaultBusToleranceDeg);

/// Bisection for the highest passing cutoff in [f_lo, f_hi], assuming a single
/// pass/fail transition. Returns NoCandidatePasses if f_lo does not pass.
MinLpfResult min_lpf_bisect(const MicrogridScenario& scenario, double f_lo, double f_hi, double rel_tol,
                            const std::vector<double>& grid, double tolerance_deg = kDefaultBusToleranceDeg);

}  // namespace dcpass
