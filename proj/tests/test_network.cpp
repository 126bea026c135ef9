#include <catch_amalgamated.hpp>

#include "dcpass/errors.hpp"
#include "dcpass/network.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace dcpass;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double kPi = std::numbers::pi;
const DroopKind kAll[] = {DroopKind::IV, DroopKind::VI, DroopKind::PV, DroopKind::VP};

Complex at(const RationalTF& tf, double f) { return tf(Complex(0.0, 2.0 * kPi * f)); }

MicrogridScenario scenario(DroopKind k, double multiple, std::optional<double> lpf = {}, double line_multiple = 1.0) {
    MicrogridScenario s;
    s.droop = DroopSpec::table_default(k, lpf);
    s.p_load = 3600.0 * multiple;
    s.line.length_m *= line_multiple;
    return s;
}

std::vector<double> default_grid() { return FrequencyGrid{}.points(); }

}  // namespace

TEST_CASE("line impedance scales with length") {
    const RationalTF z = line_impedance(LineParams{});
    CHECK_THAT(z.num().coefficients()[0] / z.den().coefficients()[0], WithinRel(0.29, 1e-12));
    CHECK_THAT(z.num().coefficients()[1] / z.den().coefficients()[0], WithinRel(2.9e-4, 1e-12));

    LineParams ten;
    ten.length_m = 290.0;
    const Complex v = at(line_impedance(ten), 1000.0);
    CHECK_THAT(v.real(), WithinRel(2.9, 1e-12));
    CHECK_THAT(v.imag(), WithinRel(2.9e-3 * 2.0 * kPi * 1000.0, 1e-12));

    LineParams tiny;
    tiny.length_m = 1e-6;
    CHECK(std::abs(at(line_impedance(tiny), 50.0)) < 1e-7);

    LineParams bad;
    bad.length_m = 0.0;
    CHECK_THROWS(bad.validate());
    bad = LineParams{};
    bad.r_per_m = -1.0;
    CHECK_THROWS(bad.validate());
}

TEST_CASE("elementary bus members have fixed phases") {
    const RationalTF cpl = cpl_impedance({3600.0, 339.44});
    CHECK_THAT(at(cpl, 1.0).real(), WithinAbs(-32.0, 0.01));
    CHECK_THAT(at(cpl_impedance({4.0 * 3600.0, 339.44}), 1.0).real(), WithinAbs(-8.0, 0.01));
    CHECK_THROWS_AS(cpl_impedance({0.0, 339.44}), std::invalid_argument);
    CHECK_THROWS_AS(bus_capacitor_impedance(0.0), std::invalid_argument);

    const RationalTF cap = bus_capacitor_impedance(3.3e-3);
    const RationalTF line = line_impedance(LineParams{});
    for (double f : {0.1, 3.0, 100.0, 5e3}) {
        CHECK_THAT(std::abs(tf_eval(cpl, f).phase_deg), WithinAbs(180.0, 1e-12));
        CHECK_THAT(tf_eval(cap, f).phase_deg, WithinAbs(-90.0, 1e-12));
    }
    CHECK_THAT(std::abs(at(cap, 1.0)), WithinAbs(48.23, 0.005));
    CHECK(tf_eval(line, 1e2).phase_deg < tf_eval(line, 1e4).phase_deg);
    CHECK_THAT(tf_eval(line, 1e6).phase_deg, WithinAbs(90.0, 0.01));
}

TEST_CASE("bus impedance folds members in parallel") {
    const RationalTF two = RationalTF::constant(2.0);
    CHECK_THAT(at(bus_impedance({two, two, two}), 1.0).real(), WithinRel(2.0 / 3.0, 1e-14));
    const RationalTF a = RationalTF::from_coefficients({1.0, 2.0}, {3.0, 1.0});
    CHECK(bus_impedance({a}) == a);
    CHECK_THROWS_AS(bus_impedance({}), std::invalid_argument);
}

TEST_CASE("bus impedance at DC is the converter branch against the load") {
    // Without the line: d parallel with -v^2/P.
    MicrogridScenario s = scenario(DroopKind::VI, 1.0);
    s.line.length_m = 1e-9;
    const MicrogridModel bare = build_microgrid(s);
    const double r_cpl = -bare.op.v_load * bare.op.v_load / 3600.0;
    CHECK_THAT(r_cpl, WithinAbs(-32.0, 0.01));
    CHECK_THAT(at(bare.z_bus, 0.01).real(), WithinRel(1.032, 0.01));

    // With the default line the converter branch gains 0.29 Ohm and the load sits at v_load.
    const MicrogridModel m = build_microgrid(scenario(DroopKind::VI, 1.0));
    const double branch = 1.0 + LineParams{}.resistance();
    const double load = -m.op.v_load * m.op.v_load / 3600.0;
    CHECK_THAT(at(m.z_bus, 0.01).real(), WithinRel(branch * load / (branch + load), 0.01));
}

TEST_CASE("bus impedance equals the reciprocal sum of member admittances") {
    for (DroopKind k : kAll) {
        for (auto lpf : {std::optional<double>{}, std::optional<double>{30.0}}) {
            const MicrogridModel m = build_microgrid(scenario(k, 2.0, lpf));
            const auto members =
                single_converter_bus_members(m.converter.z, LineParams{}, 3.3e-3, CPLParams{7200.0, m.op.v_load});
            REQUIRE(members.size() == 3);
            for (double f : logspace(0.1, 1e4, 40)) {
                Complex y = 0.0;
                for (const RationalTF& z : members) y += 1.0 / at(z, f);
                const Complex expect = 1.0 / y;
                CHECK(std::abs(at(m.z_bus, f) - expect) <= 1e-9 * std::abs(expect));
            }
        }
    }
}

TEST_CASE("passive members in parallel stay passive") {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> lg(-3.0, 3.0);
    auto val = [&] { return std::pow(10.0, lg(rng)); };
    for (int trial = 0; trial < 200; ++trial) {
        // Series RL, parallel RC and a plain capacitor: each has Re >= 0 on the jw axis.
        const RationalTF rl = RationalTF::from_coefficients({val(), val() * 1e-3}, {1.0});
        const RationalTF rc = tf_parallel(RationalTF::constant(val()), bus_capacitor_impedance(val() * 1e-3));
        const RationalTF c = bus_capacitor_impedance(val() * 1e-3);
        const RationalTF bus = bus_impedance({rl, rc, c});
        for (double f : logspace(0.01, 1e5, 30)) {
            CHECK(at(bus, f).real() >= -1e-12 * std::abs(at(bus, f)));
        }
    }
}

TEST_CASE("system passivity of simple buses") {
    const auto grid = default_grid();
    const RationalTF rc = tf_parallel(RationalTF::constant(5.0), bus_capacitor_impedance(1e-3));
    CHECK(system_passivity_check(rc, grid).passed());

    const PassivityReport neg = system_passivity_check(RationalTF::constant(-3.0), grid);
    CHECK_FALSE(neg.passed());
    REQUIRE(neg.non_passive_bands.size() == 1);
    CHECK(neg.non_passive_bands[0].f_lo == grid.front());
    CHECK(neg.non_passive_bands[0].f_hi == grid.back());
    CHECK(neg.threshold == 0.0);
}

TEST_CASE("rated load with a 30 Hz filter is passive for every droop") {
    for (DroopKind k : kAll) {
        const MicrogridModel m = build_microgrid(scenario(k, 1.0, 30.0));
        CAPTURE(to_string(k));
        CHECK(system_passivity_check(m.z_bus, default_grid()).passed());
    }
}

TEST_CASE("zero load omits the constant-power load") {
    const MicrogridModel m = build_microgrid(scenario(DroopKind::VI, 0.0));
    CHECK_FALSE(m.cpl.has_value());
    const auto members = single_converter_bus_members(m.converter.z, LineParams{}, 3.3e-3, std::nullopt);
    CHECK(members.size() == 2);
    CHECK(std::abs(at(m.z_bus, 10.0) - at(bus_impedance(members), 10.0)) < 1e-9 * std::abs(at(m.z_bus, 10.0)));
}

TEST_CASE("minimum filter search over discrete candidates") {
    const auto grid = default_grid();
    const std::vector<std::optional<double>> set{std::nullopt, 100.0, 30.0};
    for (DroopKind k : {DroopKind::VI, DroopKind::VP}) {
        CAPTURE(to_string(k));
        const MinLpfResult r3 = min_lpf_for_passivity(scenario(k, 3.0), set, grid);
        CHECK(r3.outcome == MinLpfOutcome::Found);
        CHECK(r3.cutoff_hz == std::optional<double>(30.0));
        CHECK(r3.tried.size() == 3);
        CHECK_FALSE(r3.tried.front().has_value());

        const MinLpfResult r4 = min_lpf_for_passivity(scenario(k, 4.0), {30.0}, grid);
        CHECK(r4.outcome == MinLpfOutcome::NoCandidatePasses);
        CHECK_FALSE(r4.cutoff_hz.has_value());
    }
    const MinLpfResult r1 = min_lpf_for_passivity(scenario(DroopKind::VI, 1.0), {30.0, std::nullopt, 100.0}, grid);
    CHECK(r1.outcome == MinLpfOutcome::NotNeeded);
    CHECK(r1.tried.size() == 1);
}

TEST_CASE("bisection brackets the discrete answer") {
    const auto grid = default_grid();
    const MicrogridScenario s = scenario(DroopKind::VI, 3.0);
    const MinLpfResult r = min_lpf_bisect(s, 1.0, 1000.0, 0.01, grid);
    REQUIRE(r.outcome == MinLpfOutcome::Found);
    const double fc = *r.cutoff_hz;
    CHECK(fc >= 30.0);
    CHECK(fc < 100.0);
    MicrogridScenario pass = s, fail = s;
    pass.droop.lpf_cutoff = fc;
    fail.droop.lpf_cutoff = fc * 1.05;
    CHECK(system_passivity_check(build_microgrid(pass).z_bus, grid).passed());
    CHECK_FALSE(system_passivity_check(build_microgrid(fail).z_bus, grid).passed());
}

TEST_CASE("band edges are reproducible under grid refinement") {
    FrequencyGrid coarse;
    FrequencyGrid fine = coarse;
    fine.points_per_decade *= 2;
    const double half_step = std::pow(10.0, 0.5 / coarse.points_per_decade);
    for (DroopKind k : kAll) {
        for (double mult : {2.0, 3.0, 4.0}) {
            const MicrogridModel m = build_microgrid(scenario(k, mult, 30.0));
            const PassivityReport a = system_passivity_check(m.z_bus, coarse.points());
            const PassivityReport b = system_passivity_check(m.z_bus, fine.points());
            REQUIRE(a.non_passive_bands.size() == b.non_passive_bands.size());
            for (std::size_t i = 0; i < a.non_passive_bands.size(); ++i) {
                const double rl = a.non_passive_bands[i].f_lo / b.non_passive_bands[i].f_lo;
                const double rh = a.non_passive_bands[i].f_hi / b.non_passive_bands[i].f_hi;
                CHECK(std::max(rl, 1.0 / rl) < half_step);
                CHECK(std::max(rh, 1.0 / rh) < half_step);
            }
        }
    }
}

TEST_CASE("scenario validation") {
    MicrogridScenario s;
    s.c_bus = 0.0;
    CHECK_THROWS(s.validate());
    s = MicrogridScenario{};
    s.p_load = -1.0;
    CHECK_THROWS(s.validate());
}
