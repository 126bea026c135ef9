#include <catch_amalgamated.hpp>

#include "dcpass/droop_impedance.hpp"
#include "dcpass/errors.hpp"

#include <cmath>
#include <numbers>

using namespace dcpass;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double kPi = std::numbers::pi;
const DroopKind kAll[] = {DroopKind::IV, DroopKind::VI, DroopKind::PV, DroopKind::VP};

ConverterImpedanceModel model_at(const DroopSpec& d, double p = 3600.0) {
    const ConverterParams params;
    const OperatingPoint design = solve_operating_point(params, d, 3600.0);
    const ControllerSet c = design_controllers(params, design, LoopBandwidths{});
    const OperatingPoint op = solve_operating_point(params, d, p);
    return analytic_output_impedance(params, d, op, c);
}

Complex z_at(const ConverterImpedanceModel& m, double f) { return tf_eval(m.z, f).value; }

}  // namespace

TEST_CASE("current droops look like the droop resistance at low frequency") {
    for (DroopKind k : {DroopKind::VI, DroopKind::IV}) {
        const auto m = model_at(DroopSpec::table_default(k));
        const ComplexResponse r = tf_eval(m.z, 0.01);
        CHECK_THAT(std::abs(r.value), WithinRel(1.0, 0.10));
        CHECK_THAT(r.phase_deg, WithinAbs(0.0, 5.0));
    }
}

TEST_CASE("power droops look like the small-signal droop slope at low frequency") {
    for (DroopKind k : {DroopKind::VP, DroopKind::PV}) {
        const auto m = model_at(DroopSpec::table_default(k));
        // v = V_o - k v i  =>  -dv/di = k v^2 / V_o.
        const double slope = (10.0 / 3600.0) * m.op.v_bus * m.op.v_bus / 350.0;
        CHECK_THAT(std::abs(z_at(m, 0.01)), WithinRel(slope, 0.10));
    }
}

TEST_CASE("impedance rolls off as 1/s at high frequency") {
    const double c_out = ConverterParams{}.C_out;
    for (DroopKind k : kAll) {
        for (auto lpf : {std::optional<double>{}, std::optional<double>{30.0}}) {
            const auto m = model_at(DroopSpec::table_default(k, lpf));
            const double w6 = 2.0 * kPi * 1e6, w7 = 2.0 * kPi * 1e7;
            CHECK_THAT(std::abs(z_at(m, 1e7)) * w7, WithinRel(std::abs(z_at(m, 1e6)) * w6, 0.01));
            CHECK(m.z.num().degree() <= m.z.den().degree() + 1);
            if (uses_voltage_loop(k) && lpf) {
                // With the droop path filtered only the output capacitor is left.
                CHECK_THAT(std::abs(z_at(m, 1e6)) * w6 * c_out, WithinRel(1.0, 0.01));
            }
        }
    }
}

TEST_CASE("IV and PV coincide when their small-signal droop slopes match") {
    const auto iv = model_at(DroopSpec::table_default(DroopKind::IV));
    // Pick k so that k v^2 / V_o equals d = 1 at the rated operating point.
    DroopSpec pv = DroopSpec::table_default(DroopKind::PV);
    for (int i = 0; i < 50; ++i) {
        const double v = solve_operating_point(ConverterParams{}, pv, 3600.0).v_bus;
        pv.coefficient = 350.0 / (v * v);
    }
    const auto m = model_at(pv);
    for (double f : {0.1, 0.5, 1.0, 3.0, 10.0}) {
        const Complex a = z_at(iv, f), b = z_at(m, f);
        CHECK(std::abs(std::abs(b) / std::abs(a) - 1.0) < 0.05);
    }
}

TEST_CASE("unfiltered current droop is non-passive around the current loop") {
    const auto m = model_at(DroopSpec::table_default(DroopKind::VI));
    const PassivityReport r = converter_passivity_report(m, FrequencyGrid{}.points());
    CHECK(r.verdict == Verdict::Fail);
    bool covers_inner = false;
    for (const FrequencyBand& b : r.non_passive_bands) covers_inner = covers_inner || (b.f_lo <= 3000.0 && b.f_hi >= 3000.0);
    CHECK(covers_inner);
    CHECK(r.threshold == 300.0);
}

TEST_CASE("converter report on elementary impedances") {
    ConverterImpedanceModel m;
    const auto grid = FrequencyGrid{}.points();
    m.z = RationalTF::constant(1.0);
    const PassivityReport pass = converter_passivity_report(m, grid);
    CHECK(pass.passed());
    CHECK(pass.non_passive_bands.empty());
    m.z = RationalTF::constant(-1.0);
    const PassivityReport fail = converter_passivity_report(m, grid);
    CHECK(!fail.passed());
    REQUIRE(fail.non_passive_bands.size() == 1);
    CHECK(fail.non_passive_bands[0].f_lo == grid.front());
    CHECK(fail.non_passive_bands[0].f_hi == grid.back());
}

TEST_CASE("diagnostic components are retained") {
    const auto vi = model_at(DroopSpec::table_default(DroopKind::VI, 30.0));
    for (const char* key : {"Z(s)", "G_c", "G_v", "H_lpf", "num", "den"}) CHECK(vi.components.count(key) == 1);
    CHECK(vi.components.count("G_cc") == 0);
    const auto pv = model_at(DroopSpec::table_default(DroopKind::PV));
    CHECK(pv.components.count("G_cc") == 1);
    CHECK(pv.components.count("G_v") == 0);
    const RationalTF& zs = vi.components.at("Z(s)");
    CHECK_THAT(zs.num()[0] / zs.den()[0], WithinRel(0.04, 1e-12));
}

TEST_CASE("assembler refuses unsolved, mismatched and incomplete inputs") {
    const ConverterParams params;
    const DroopSpec vi = DroopSpec::table_default(DroopKind::VI);
    const OperatingPoint op = solve_operating_point(params, vi, 3600.0);
    const ControllerSet c = design_controllers(params, op, LoopBandwidths{});
    CHECK_THROWS_AS(analytic_output_impedance(params, vi, OperatingPoint{}, c), UnsolvedOperatingPoint);
    CHECK_THROWS_AS(analytic_output_impedance(params, DroopSpec::table_default(DroopKind::IV), op, c),
                    InconsistentDroopKind);

    ImpedanceSymbols sym = bind_symbols(params, vi, op, c);
    CHECK(sym.R_vd.has_value());
    CHECK(!sym.k.has_value());
    CHECK(!sym.G_cc.has_value());
    CHECK_NOTHROW(assemble_output_impedance(DroopKind::VI, sym));
    CHECK_THROWS_AS(assemble_output_impedance(DroopKind::IV, sym), UnboundSymbol);
    CHECK_THROWS_AS(assemble_output_impedance(DroopKind::VP, sym), UnboundSymbol);
    sym.G_v.reset();
    CHECK_THROWS_AS(assemble_output_impedance(DroopKind::VI, sym), UnboundSymbol);
    ImpedanceSymbols empty;
    for (DroopKind k : kAll) CHECK_THROWS_AS(assemble_output_impedance(k, empty), UnboundSymbol);
}

TEST_CASE("lowering the filter cutoff never adds converter non-passivity above the threshold") {
    const auto grid = FrequencyGrid{}.points();
    const double cutoffs[] = {200.0, 100.0, 50.0, 30.0, 10.0};
    for (DroopKind k : kAll) {
        for (double p : {3600.0, 7200.0, 10800.0}) {
            bool passed_lighter = false;
            for (double fc : cutoffs) {
                const bool pass = converter_passivity_report(model_at(DroopSpec::table_default(k, fc), p), grid).passed();
                if (passed_lighter) CHECK(pass);
                passed_lighter = passed_lighter || pass;
            }
        }
    }
}
