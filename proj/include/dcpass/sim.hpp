#pragma once

// Nonlinear averaged-model simulation of the single-converter microgrid with
// the full droop + dual-loop control chain, and perturbation-injection
// impedance measurement on top of it.

#include "dcpass/network.hpp"
#include "dcpass/ratfun.hpp"

#include <array>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace dcpass {

struct StateVector {
    double i_l = 0.0;     // A
    double v_cout = 0.0;  // V, converter output capacitor
    double i_line = 0.0;  // A
    double v_cbus = 0.0;  // V, load bus capacitor
    double x_cc = 0.0;    // inner current PI integrator (duty)
    double x_v = 0.0;     // voltage PI integrator (A), VI/VP
    double x_occ = 0.0;   // outer current PI integrator (A), IV/PV
    double x_lpf = 0.0;   // droop feedback filter state

    static constexpr std::size_t size = 8;
    std::array<double, size> to_array() const;
    static StateVector from_array(const std::array<double, size>& a);
};

enum class InjectionNode { ConverterTerminal, LoadBus };

enum class SimEventKind { SetCplPower, InjectStart, InjectStop };

struct SimEvent {
    double t = 0.0;  // s
    SimEventKind kind = SimEventKind::SetCplPower;
    double power = 0.0;        // W, SetCplPower
    double frequency = 0.0;    // Hz, InjectStart
    double amplitude = 0.0;    // A, InjectStart
};

struct SimOptions {
    double dt = 2e-6;                          // s
    double undervoltage_limit_fraction = 0.5;  // of V_o; CPL draws constant current below it
    double shed_fraction = 0.1;                // of V_o; CPL is disconnected below it
    double duty_min = 0.05;
    double duty_max = 0.95;
    double divergence_limit = 1e6;
    std::size_t record_every = 10;             // integration steps per stored sample
    InjectionNode injection_node = InjectionNode::ConverterTerminal;
    /// Replaces the converter by an ideal voltage source held at its initial terminal
    /// voltage; controllers are frozen. Leaves a passive line + bus network for self-tests.
    bool ideal_source = false;
};

struct SimTrace {
    std::vector<double> t;
    std::vector<StateVector> states;
    std::vector<double> v_bus;   // load bus voltage v_cbus, V
    std::vector<double> p_cpl;   // power drawn by the load, W
    std::vector<double> duty;
    std::vector<SimEvent> events;
    double dt = 0.0;             // spacing of stored samples, s
    double integration_dt = 0.0;
    bool diverged = false;
    std::optional<double> divergence_time;
};

/// Integrates from the exact equilibrium of scenario.p_load (controllers designed at
/// scenario.p_design) until t_end. Divergence stops the run and sets trace.diverged.
/// Throws InvalidTimestep when dt is not positive or exceeds 1/(20 f_cc_inner), and
/// std::invalid_argument for unordered events, events at or after t_end, or a line
/// without inductance.
SimTrace simulate(const MicrogridScenario& scenario, const std::vector<SimEvent>& events, double t_end,
                  const SimOptions& options = {});

/// Load steps from the rated power up to scenario.p_load in whole multiples of p_design,
/// one per dwell, starting at t = dwell. Returns the events and sets *start_power.
std::vector<SimEvent> staircase_events(const MicrogridScenario& scenario, double dwell, double* start_power);

enum class OscillationVerdict { Stable, Marginal, Unstable };
std::string_view to_string(OscillationVerdict v);

struct OscillationReport {
    OscillationVerdict verdict = OscillationVerdict::Stable;
    double pkpk_ratio = 0.0;      // peak-to-peak over mean of v_bus in the window
    double dominant_freq = 0.0;   // Hz
    double growth_ratio = 0.0;    // last-segment pk-pk over first-segment pk-pk
    bool diverged = false;
};

inline constexpr double kMinSettleWindow = 1.0;  // ten cycles of 10 Hz

/// Classifies the final settle_window of trace.v_bus. A diverged trace is Unstable.
/// Throws WindowTooShort when settle_window < 1 s or the trace is shorter than it.
OscillationReport detect_oscillation(const SimTrace& trace, double settle_window);

struct InjectionOptions {
    SimOptions sim;
    double amplitude_fraction = 0.01;   // of the DC output current
    std::size_t discard_periods = 10;
    double discard_min_time = 1.0;      // s
    std::size_t measure_periods = 20;
    double min_measure_time = 0.0;      // s; periods are added until reached
    double consistency_tol = 0.01;      // first-half vs second-half phasor agreement
};

/// Injects a sinusoidal current at the chosen node of a settled scenario and returns
/// V/I at frequency f. At the converter terminal the result is -v_cout/i_out with the
/// network attached; at the load bus it is v_cbus / i_inj.
/// Throws UnstableBase when the run diverges or the response drifts, PoorExcitation when
/// the phasors vanish into round-off.
Complex measure_impedance_injection(const MicrogridScenario& scenario, double f, const InjectionOptions& options = {});

struct MeasuredPoint {
    double frequency = 0.0;
    std::optional<Complex> value;
    std::string error;   // set when value is empty
};

std::vector<MeasuredPoint> frequency_sweep_measured(const MicrogridScenario& scenario, const std::vector<double>& grid,
                                                    const InjectionOptions& options = {});

/// CSV with columns t, v_bus, i_l, i_line, duty, p_cpl, one row per decimation stored samples.
void write_trace_csv(std::ostream& out, const SimTrace& trace, std::size_t decimation = 50);

}  // namespace dcpass
