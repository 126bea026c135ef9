#include "dcpass/control.hpp"

#include "dcpass/errors.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dcpass {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kZeroRatio = 10.0;  // PI zero one decade below crossover

PiGains magnitude_rule(const RationalTF& plant, double f_bw, const char* loop) {
    if (!(f_bw > 0.0)) {
        throw BandwidthInfeasible(std::string(loop) + ": bandwidth must be positive");
    }
    const double w = kTwoPi * f_bw;
    const double plant_mag = std::abs(plant(Complex(0.0, w)));
    // |kp (1 + wz/(j w))| = kp sqrt(1 + (wz/w)^2) at crossover.
    const double pi_shape = std::hypot(1.0, 1.0 / kZeroRatio);
    const double kp = 1.0 / (plant_mag * pi_shape);
    if (!std::isfinite(kp) || !(kp > 0.0)) {
        throw BandwidthInfeasible(std::string(loop) + ": no positive gain achieves the crossover");
    }
    return {kp, kp * w / kZeroRatio};
}

}  // namespace

void LoopBandwidths::validate(double f_sw) const {
    if (!(f_cc_inner > 0.0 && f_v > 0.0 && f_cc_outer > 0.0)) {
        throw std::invalid_argument("loop bandwidths must be positive");
    }
    if (!(f_cc_inner > f_v)) {
        throw std::invalid_argument("inner current bandwidth must exceed the voltage bandwidth");
    }
    if (!(f_cc_inner > f_cc_outer)) {
        throw std::invalid_argument("inner current bandwidth must exceed the outer current bandwidth");
    }
    if (!(f_cc_inner <= f_sw / 6.0)) {
        throw std::invalid_argument("inner current bandwidth must not exceed f_sw/6");
    }
}

double PiGains::zero_hz() const { return ki / (kTwoPi * kp); }

RationalTF PiGains::tf() const { return RationalTF::from_coefficients({ki, kp}, {0.0, 1.0}); }

RationalTF current_loop_plant(const ConverterParams& params, const OperatingPoint& op) {
    return RationalTF::from_coefficients({op.v_bus}, {params.series_resistance(), params.L});
}

RationalTF voltage_loop_plant(const ConverterParams& params) {
    return RationalTF::from_coefficients({1.0}, {0.0, params.C_out});
}

RationalTF outer_current_loop_plant(const OperatingPoint& op) {
    return RationalTF::constant(1.0 / (1.0 - op.duty));
}

PiGains design_current_controller(const ConverterParams& params, const OperatingPoint& op, double f_bw) {
    if (!(f_bw < params.f_sw / 6.0)) {
        throw BandwidthInfeasible("current loop: bandwidth must stay below f_sw/6");
    }
    if (!op.solved()) {
        throw BandwidthInfeasible("current loop: operating point is not solved");
    }
    return magnitude_rule(current_loop_plant(params, op), f_bw, "current loop");
}

PiGains design_voltage_controller(const ConverterParams& params, double f_bw, double f_inner) {
    if (!(6.0 * f_bw <= f_inner)) {
        throw BandwidthInfeasible("voltage loop: bandwidth must be at least 6x below the inner loop");
    }
    return magnitude_rule(voltage_loop_plant(params), f_bw, "voltage loop");
}

PiGains design_outer_current_controller(const OperatingPoint& op, double f_bw, double f_inner) {
    if (!(6.0 * f_bw <= f_inner)) {
        throw BandwidthInfeasible("outer current loop: bandwidth must be at least 6x below the inner loop");
    }
    if (!op.solved()) {
        throw BandwidthInfeasible("outer current loop: operating point is not solved");
    }
    return magnitude_rule(outer_current_loop_plant(op), f_bw, "outer current loop");
}

ControllerSet design_controllers(const ConverterParams& params, const OperatingPoint& design_op,
                                 const LoopBandwidths& loops) {
    loops.validate(params.f_sw);
    ControllerSet set;
    set.loops = loops;
    set.current = design_current_controller(params, design_op, loops.f_cc_inner);
    set.voltage = design_voltage_controller(params, loops.f_v, loops.f_cc_inner);
    set.outer_current = design_outer_current_controller(design_op, loops.f_cc_outer, loops.f_cc_inner);
    return set;
}

RationalTF droop_lpf(double cutoff_hz) {
    if (!(cutoff_hz > 0.0)) {
        throw std::invalid_argument("droop_lpf: cutoff must be positive");
    }
    const double wc = kTwoPi * cutoff_hz;
    return RationalTF::from_coefficients({wc}, {wc, 1.0});
}

double phase_margin_deg(const RationalTF& open_loop, double f_hint) {
    const auto log_mag = [&](double f) { return std::log(std::abs(open_loop(Complex(0.0, kTwoPi * f)))); };
    // Scan outward from the hint for the nearest sign change of log|L|.
    const int n = 400;
    double best_lo = 0.0;
    double best_hi = 0.0;
    double best_dist = INFINITY;
    double prev_f = f_hint / 100.0;
    double prev = log_mag(prev_f);
    for (int i = 1; i <= n; ++i) {
        const double f = f_hint / 100.0 * std::pow(10.0, 4.0 * i / n);
        const double cur = log_mag(f);
        if ((prev > 0.0) != (cur > 0.0)) {
            const double dist = std::abs(std::log(f / f_hint));
            if (dist < best_dist) {
                best_dist = dist;
                best_lo = prev_f;
                best_hi = f;
            }
        }
        prev = cur;
        prev_f = f;
    }
    if (!std::isfinite(best_dist)) {
        throw std::runtime_error("phase_margin_deg: no unity crossover near the hint");
    }
    const bool rising = log_mag(best_lo) < 0.0;
    for (int it = 0; it < 100; ++it) {
        const double mid = std::sqrt(best_lo * best_hi);
        ((log_mag(mid) < 0.0) == rising ? best_lo : best_hi) = mid;
    }
    const Complex l = open_loop(Complex(0.0, kTwoPi * std::sqrt(best_lo * best_hi)));
    return 180.0 + std::atan2(l.imag(), l.real()) * 180.0 / std::numbers::pi;
}

}  // namespace dcpass
