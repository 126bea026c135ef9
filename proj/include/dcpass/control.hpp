#pragma once

// PI loop synthesis for the inner current, outer voltage and outer current
// loops, plus the first-order filter placed in the droop feedback.
//
// Every PI is tuned by the same rule: the zero sits one decade below the
// target crossover and the proportional gain makes |loop(j 2 pi f_bw)| = 1
// exactly for the design plant.

#include "dcpass/plant.hpp"
#include "dcpass/ratfun.hpp"

namespace dcpass {

struct LoopBandwidths {
    double f_cc_inner = 3000.0;  // inner current loop, Hz
    double f_v = 200.0;          // outer voltage loop, Hz
    double f_cc_outer = 200.0;   // outer current loop, Hz

    /// Checks the loop hierarchy against the switching frequency (inner <= f_sw/6).
    void validate(double f_sw) const;
};

struct PiGains {
    double kp = 0.0;
    double ki = 0.0;

    double zero_hz() const;
    /// (kp s + ki) / s
    RationalTF tf() const;
};

/// Gains of all three loops, designed once for a converter at its design operating point.
struct ControllerSet {
    LoopBandwidths loops;
    PiGains current;        // G_c: inductor-current error -> duty
    PiGains voltage;        // G_v: voltage error -> inductor-current reference (VI/VP)
    PiGains outer_current;  // G_cc: output-current error -> inductor-current reference (IV/PV)
};

/// Design plant of the inner loop: duty -> inductor current, v_bus / (r_bat + r_f + L s).
RationalTF current_loop_plant(const ConverterParams& params, const OperatingPoint& op);
/// Design plant of the voltage loop: inductor-current reference -> voltage, 1/(s C_out).
RationalTF voltage_loop_plant(const ConverterParams& params);
/// Design plant of the outer current loop: the static ratio i_l / i_out = 1/(1 - duty).
RationalTF outer_current_loop_plant(const OperatingPoint& op);

/// Throws BandwidthInfeasible when f_bw >= f_sw / 6 or a positive gain cannot be found.
PiGains design_current_controller(const ConverterParams& params, const OperatingPoint& op, double f_bw);
/// Throws BandwidthInfeasible unless f_bw is at least 6x below f_inner.
PiGains design_voltage_controller(const ConverterParams& params, double f_bw, double f_inner);
PiGains design_outer_current_controller(const OperatingPoint& op, double f_bw, double f_inner);

ControllerSet design_controllers(const ConverterParams& params, const OperatingPoint& design_op,
                                 const LoopBandwidths& loops);

/// H(s) = wc / (s + wc), wc = 2 pi cutoff. Throws std::invalid_argument for cutoff <= 0.
RationalTF droop_lpf(double cutoff_hz);

/// Phase margin in degrees of an open loop with a single unity crossover at
/// or near f_hint (searched on a log grid over four decades around it).
double phase_margin_deg(const RationalTF& open_loop, double f_hint);

}  // namespace dcpass
