#include <catch_amalgamated.hpp>

#include "dcpass/errors.hpp"
#include "dcpass/ratfun.hpp"

#include <cmath>
#include <numbers>
#include <random>

using namespace dcpass;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

constexpr double kPi = std::numbers::pi;

Complex at(const RationalTF& tf, double f) { return tf(Complex(0.0, 2.0 * kPi * f)); }

double rel_diff(Complex a, Complex b) { return std::abs(a - b) / std::max(std::abs(a), std::abs(b)); }

// Random stable TF: poles and zeros drawn in the open left half plane.
RationalTF random_tf(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> mag(0.0, 4.0);
    std::uniform_int_distribution<int> order(0, 3);
    std::uniform_real_distribution<double> gain(0.2, 5.0);
    auto poly = [&](int n) {
        Polynomial p = Polynomial::constant(1.0);
        for (int i = 0; i < n; ++i) p = p * Polynomial({std::pow(10.0, mag(rng)), 1.0});
        return p;
    };
    const int nd = order(rng);
    const int nn = std::uniform_int_distribution<int>(0, nd)(rng);
    return {poly(nn).scaled(gain(rng)), poly(nd)};
}

std::vector<double> omega_grid() {
    std::vector<double> f;
    for (int i = 0; i < 50; ++i) f.push_back(std::pow(10.0, -1.0 + 6.0 * i / 49.0));
    return f;
}

}  // namespace

TEST_CASE("canonical form trims, scales and strips common powers of s") {
    RationalTF a = RationalTF::from_coefficients({0.0, 2.0, 4.0, 0.0}, {0.0, 0.0, 8.0, 0.0});
    CHECK(a.den().max_abs_coefficient() == 1.0);
    CHECK(a.num() == Polynomial({0.25, 0.5}));
    CHECK(a.den() == Polynomial({0.0, 1.0}));
    CHECK(canonical(canonical(a)) == canonical(a));

    RationalTF z = RationalTF::from_coefficients({0.0, 0.0}, {3.0, 1.0});
    CHECK(z.is_zero());
    CHECK(z.den() == Polynomial({1.0}));
    CHECK_THROWS_AS(RationalTF::from_coefficients({1.0}, {0.0}), std::invalid_argument);
}

TEST_CASE("evaluation of elementary impedances") {
    const double c = 3.3e-3;
    const RationalTF zc = RationalTF::from_coefficients({1.0}, {0.0, c});
    const ComplexResponse r = tf_eval(zc, 1.0);
    CHECK_THAT(std::abs(r.value), WithinRel(1.0 / (2.0 * kPi * c), 1e-12));
    CHECK_THAT(std::abs(r.value), WithinAbs(48.23, 0.005));
    CHECK_THAT(r.phase_deg, WithinAbs(-90.0, 1e-9));

    const RationalTF pole = RationalTF::from_coefficients({1.0}, {2.0 * kPi * 10.0, 1.0});
    const ComplexResponse p = tf_eval(pole, 10.0);
    CHECK_THAT(std::abs(p.value), WithinRel(1.0 / (2.0 * kPi * 10.0 * std::sqrt(2.0)), 1e-12));
    CHECK_THAT(p.phase_deg, WithinAbs(-45.0, 1e-9));

    for (double f : {0.1, 1.0, 1e3, 1e5}) {
        const ComplexResponse r5 = tf_eval(RationalTF::constant(5.0), f);
        CHECK(r5.value == Complex(5.0, 0.0));
        CHECK(r5.phase_deg == 0.0);
    }
    CHECK(std::abs(make_response(1.0, Complex(-1.0, 0.0)).phase_deg - 180.0) < 1e-12);
    CHECK_THAT(make_response(1.0, Complex(10.0, 0.0)).magnitude_db, WithinAbs(20.0, 1e-12));
}

TEST_CASE("evaluation near a pole is refused") {
    const double w0 = 2.0 * kPi * 50.0;
    const RationalTF res = RationalTF::from_coefficients({1.0}, {w0 * w0, 0.0, 1.0});
    CHECK_THROWS_AS(tf_eval(res, 50.0), NearPole);
    CHECK_NOTHROW(tf_eval(res, 49.0));
}

TEST_CASE("evaluation is conjugate symmetric") {
    std::mt19937_64 rng(7);
    for (int i = 0; i < 50; ++i) {
        const RationalTF tf = random_tf(rng);
        for (double w : {0.3, 17.0, 2500.0}) {
            const Complex pos = tf.num().eval({0.0, w}) / tf.den().eval({0.0, w});
            const Complex neg = tf.num().eval({0.0, -w}) / tf.den().eval({0.0, -w});
            CHECK(rel_diff(pos, std::conj(neg)) < 1e-12);
        }
    }
}

TEST_CASE("parallel combination") {
    CHECK_THAT(at(tf_parallel(RationalTF::constant(2.0), RationalTF::constant(2.0)), 1.0).real(), WithinRel(1.0, 1e-15));
    const RationalTF big = RationalTF::constant(1e12);
    CHECK_THAT(at(tf_parallel(RationalTF::constant(7.0), big), 1.0).real(), WithinRel(7.0, 1e-6));

    const double c = 1e-3, R = 10.0;
    const RationalTF zc = RationalTF::from_coefficients({1.0}, {0.0, c});
    const RationalTF rc = tf_parallel(zc, RationalTF::constant(R));
    CHECK(rel_diff(at(rc, 1e-4), R) < 1e-5);
    const double fh = 1e6;
    CHECK(rel_diff(at(rc, fh), at(zc, fh)) < 1e-4);

    const RationalTF a = RationalTF::from_coefficients({1.0, 2.0}, {3.0, 1.0});
    CHECK_THROWS_AS(tf_parallel(a, -a), DegenerateParallel);
}

TEST_CASE("feedback closure") {
    const RationalTF g = RationalTF::from_coefficients({3.0, 1.0}, {1.0, 2.0, 1.0});
    const auto fg = omega_grid();
    const RationalTF open = tf_feedback(g, RationalTF());
    for (double f : fg) CHECK(rel_diff(at(open, f), at(g, f)) < 1e-12);

    const double K = 40.0;
    const RationalTF integ = RationalTF::from_coefficients({K}, {0.0, 1.0});
    const RationalTF cl = tf_feedback(integ, RationalTF::constant(1.0));
    const RationalTF expect = RationalTF::from_coefficients({K}, {K, 1.0});
    for (double f : fg) CHECK(rel_diff(at(cl, f), at(expect, f)) < 1e-12);

    CHECK_THAT(at(tf_feedback(RationalTF::constant(1.0), RationalTF::constant(1.0)), 3.0).real(), WithinRel(0.5, 1e-15));
    CHECK_THROWS_AS(tf_feedback(RationalTF::constant(1.0), RationalTF::constant(-1.0)), DegenerateLoop);
}

TEST_CASE("algebraic identities hold on random stable transfer functions") {
    std::mt19937_64 rng(20240611);
    const auto fg = omega_grid();
    for (int trial = 0; trial < 200; ++trial) {
        const RationalTF a = random_tf(rng), b = random_tf(rng), c = random_tf(rng);
        const RationalTF ab_sum = a + b, ba_sum = b + a;
        const RationalTF ab = a * b, ba = b * a;
        const RationalTF p_ab = tf_parallel(a, b), p_ba = tf_parallel(b, a);
        const RationalTF sum_l = (a + b) + c, sum_r = a + (b + c);
        const RationalTF mul_l = (a * b) * c, mul_r = a * (b * c);
        const RationalTF par_l = tf_parallel(tf_parallel(a, b), c), par_r = tf_parallel(a, tf_parallel(b, c));
        for (double f : fg) {
            const Complex va = at(a, f), vb = at(b, f);
            CHECK(rel_diff(at(ab_sum, f), at(ba_sum, f)) < 1e-9);
            CHECK(rel_diff(at(ab, f), at(ba, f)) < 1e-9);
            CHECK(rel_diff(at(p_ab, f), at(p_ba, f)) < 1e-9);
            CHECK(rel_diff(at(sum_l, f), at(sum_r, f)) < 1e-9);
            CHECK(rel_diff(at(mul_l, f), at(mul_r, f)) < 1e-9);
            CHECK(rel_diff(at(par_l, f), at(par_r, f)) < 1e-9);
            CHECK(rel_diff(at(p_ab, f), 1.0 / (1.0 / va + 1.0 / vb)) < 1e-9);
            CHECK(rel_diff(at(ab, f), va * vb) < 1e-9);
        }
        CHECK(canonical(canonical(mul_l)) == canonical(mul_l));
    }
}

TEST_CASE("polynomial roots, including lightly damped pairs") {
    const std::vector<Complex> expect{{-3.5, 46.0}, {-3.5, -46.0}, {-200.0, 3000.0}, {-200.0, -3000.0},
                                      {-18.0, 0.0}, {-1.2e4, 0.0}, {0.0, 0.0}};
    Polynomial p = Polynomial::constant(1.0);
    for (std::size_t i = 0; i < expect.size();) {
        if (expect[i].imag() != 0.0) {
            const Complex r = expect[i];
            p = p * Polynomial({std::norm(r), -2.0 * r.real(), 1.0});
            i += 2;
        } else {
            p = p * Polynomial({-expect[i].real(), 1.0});
            i += 1;
        }
    }
    const auto roots = p.roots();
    REQUIRE(roots.size() == expect.size());
    for (const Complex& e : expect) {
        double best = INFINITY;
        for (const Complex& r : roots) best = std::min(best, std::abs(r - e));
        CHECK(best <= 1e-8 * std::max(1.0, std::abs(e)));
    }
}
