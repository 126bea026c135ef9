#include <catch_amalgamated.hpp>

#include "dcpass/control.hpp"
#include "dcpass/errors.hpp"

#include <cmath>
#include <numbers>

using namespace dcpass;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double kPi = std::numbers::pi;

double loop_mag(const RationalTF& loop, double f) { return std::abs(tf_eval(loop, f).value); }

}  // namespace

TEST_CASE("inner current controller meets its crossover") {
    const ConverterParams p;
    const OperatingPoint op = solve_operating_point(p, DroopSpec::table_default(DroopKind::VI), 3600.0);
    const PiGains g = design_current_controller(p, op, 3000.0);
    const RationalTF loop = g.tf() * current_loop_plant(p, op);
    CHECK_THAT(loop_mag(loop, 3000.0), WithinAbs(1.0, 0.01));
    CHECK_THAT(g.zero_hz(), WithinRel(300.0, 1e-12));
    CHECK_THAT(g.kp, WithinRel(2.0 * kPi * 3000.0 * p.L / op.v_bus, 0.01));
    CHECK_THAT(g.kp, WithinAbs(0.111, 0.001));
    CHECK(g.kp > 0.0);
    CHECK(g.ki > 0.0);
    CHECK(phase_margin_deg(loop, 3000.0) > 45.0);
}

TEST_CASE("outer loops meet their crossovers") {
    const ConverterParams p;
    const OperatingPoint op = solve_operating_point(p, DroopSpec::table_default(DroopKind::IV), 3600.0);
    const PiGains gv = design_voltage_controller(p, 200.0, 3000.0);
    const RationalTF lv = gv.tf() * voltage_loop_plant(p);
    CHECK_THAT(loop_mag(lv, 200.0), WithinAbs(1.0, 0.01));
    CHECK_THAT(gv.zero_hz(), WithinRel(20.0, 1e-12));
    CHECK(phase_margin_deg(lv, 200.0) > 45.0);

    const RationalTF plant = outer_current_loop_plant(op);
    CHECK_THAT(std::abs(tf_eval(plant, 1.0).value), WithinRel(1.0 / (1.0 - op.duty), 1e-12));
    CHECK_THAT(std::abs(tf_eval(plant, 1.0).value), WithinAbs(2.63, 0.01));
    const PiGains gcc = design_outer_current_controller(op, 200.0, 3000.0);
    const RationalTF lcc = gcc.tf() * plant;
    CHECK_THAT(loop_mag(lcc, 200.0), WithinAbs(1.0, 0.01));
    CHECK_THAT(gcc.zero_hz(), WithinRel(20.0, 1e-12));
    CHECK(phase_margin_deg(lcc, 200.0) > 45.0);
    CHECK(gcc.kp > 0.0);
    CHECK(gcc.ki > 0.0);
}

TEST_CASE("full controller set at the reference design point") {
    const ConverterParams p;
    for (DroopKind k : {DroopKind::IV, DroopKind::VI, DroopKind::PV, DroopKind::VP}) {
        const OperatingPoint op = solve_operating_point(p, DroopSpec::table_default(k), 3600.0);
        const ControllerSet c = design_controllers(p, op, LoopBandwidths{});
        for (const PiGains& g : {c.current, c.voltage, c.outer_current}) {
            CHECK(g.kp > 0.0);
            CHECK(g.ki > 0.0);
        }
    }
}

TEST_CASE("bandwidth hierarchy is enforced") {
    const ConverterParams p;
    const OperatingPoint op = solve_operating_point(p, DroopSpec::table_default(DroopKind::VI), 3600.0);
    CHECK_THROWS_AS(design_current_controller(p, op, 4000.0), BandwidthInfeasible);
    CHECK_THROWS_AS(design_voltage_controller(p, 600.0, 3000.0), BandwidthInfeasible);
    CHECK_THROWS_AS(design_outer_current_controller(op, 600.0, 3000.0), BandwidthInfeasible);
    LoopBandwidths bad;
    bad.f_cc_inner = 5000.0;
    CHECK_THROWS_AS(bad.validate(p.f_sw), std::invalid_argument);
    CHECK_NOTHROW(LoopBandwidths{}.validate(p.f_sw));
}

TEST_CASE("droop feedback filter") {
    const RationalTF h = droop_lpf(30.0);
    const ComplexResponse at_fc = tf_eval(h, 30.0);
    CHECK_THAT(std::abs(at_fc.value), WithinRel(1.0 / std::sqrt(2.0), 1e-12));
    CHECK_THAT(at_fc.phase_deg, WithinAbs(-45.0, 1e-9));
    CHECK_THAT(std::abs(tf_eval(h, 300.0).value), WithinRel(1.0 / std::sqrt(101.0), 1e-12));
    CHECK_THAT(std::abs(tf_eval(h, 300.0).value), WithinAbs(0.0995, 0.00005));
    CHECK_THAT(std::abs(h(Complex(0.0, 0.0))), WithinRel(1.0, 1e-15));
    CHECK_THROWS_AS(droop_lpf(0.0), std::invalid_argument);
}
