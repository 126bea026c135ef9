#include "dcpass/ratfun.hpp"

#include "dcpass/errors.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dcpass {

namespace {

void trim(std::vector<double>& c) {
    while (c.size() > 1 && c.back() == 0.0) {
        c.pop_back();
    }
    if (c.empty()) {
        c.push_back(0.0);
    }
}

// Newton polish of a root found from the companion matrix.
Complex polish(const Polynomial& p, Complex z) {
    const auto c = p.coefficients();
    for (int it = 0; it < 3; ++it) {
        Complex f = 0.0;
        Complex df = 0.0;
        for (std::size_t k = c.size(); k-- > 0;) {
            df = df * z + f;
            f = f * z + c[k];
        }
        if (std::abs(df) == 0.0) {
            break;
        }
        const Complex step = f / df;
        if (!std::isfinite(step.real()) || !std::isfinite(step.imag())) {
            break;
        }
        z -= step;
        if (std::abs(step) <= 1e-15 * std::abs(z)) {
            break;
        }
    }
    return z;
}

}  // namespace

Polynomial::Polynomial(std::vector<double> ascending) : coeffs_(std::move(ascending)) {
    trim(coeffs_);
}

double Polynomial::max_abs_coefficient() const {
    double m = 0.0;
    for (double c : coeffs_) {
        m = std::max(m, std::abs(c));
    }
    return m;
}

Complex Polynomial::eval(Complex s) const {
    Complex acc = 0.0;
    for (std::size_t k = coeffs_.size(); k-- > 0;) {
        acc = acc * s + coeffs_[k];
    }
    return acc;
}

double Polynomial::eval_scale(Complex s) const {
    const double r = std::abs(s);
    double acc = 0.0;
    for (std::size_t k = coeffs_.size(); k-- > 0;) {
        acc = acc * r + std::abs(coeffs_[k]);
    }
    return acc;
}

std::vector<Complex> Polynomial::roots() const {
    std::vector<Complex> out;
    if (is_zero()) {
        return out;
    }
    std::size_t low = 0;
    while (low < coeffs_.size() && coeffs_[low] == 0.0) {
        out.emplace_back(0.0, 0.0);
        ++low;
    }
    std::vector<double> c(coeffs_.begin() + static_cast<std::ptrdiff_t>(low), coeffs_.end());
    const std::size_t n = c.size() - 1;
    if (n == 0) {
        return out;
    }
    // Substitute s = w0 z with w0 balancing the end coefficients; this keeps the
    // companion matrix entries near unity for the wide-range polynomials built here.
    const double w0 = std::pow(std::abs(c.front() / c.back()), 1.0 / static_cast<double>(n));
    std::vector<double> z(c.size());
    double pw = 1.0;
    for (std::size_t k = 0; k < c.size(); ++k) {
        z[k] = c[k] * pw;
        pw *= w0;
    }
    Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (std::size_t i = 1; i < n; ++i) {
        companion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
    }
    for (std::size_t i = 0; i < n; ++i) {
        companion(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(n - 1)) = -z[i] / z[n];
    }
    Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
    const auto& ev = solver.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
        out.push_back(polish(*this, ev(i) * w0));
    }
    return out;
}

Polynomial Polynomial::scaled(double factor) const {
    std::vector<double> c(coeffs_);
    for (double& x : c) {
        x *= factor;
    }
    return Polynomial(std::move(c));
}

Polynomial operator+(const Polynomial& a, const Polynomial& b) {
    std::vector<double> c(std::max(a.coeffs_.size(), b.coeffs_.size()), 0.0);
    for (std::size_t k = 0; k < c.size(); ++k) {
        c[k] = a[k] + b[k];
    }
    return Polynomial(std::move(c));
}

Polynomial operator-(const Polynomial& a, const Polynomial& b) {
    return a + b.scaled(-1.0);
}

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    if (a.is_zero() || b.is_zero()) {
        return Polynomial::constant(0.0);
    }
    std::vector<double> c(a.coeffs_.size() + b.coeffs_.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.coeffs_.size(); ++i) {
        for (std::size_t j = 0; j < b.coeffs_.size(); ++j) {
            c[i + j] += a.coeffs_[i] * b.coeffs_[j];
        }
    }
    return Polynomial(std::move(c));
}

RationalTF::RationalTF(Polynomial num, Polynomial den) : num_(std::move(num)), den_(std::move(den)) {
    if (den_.is_zero()) {
        throw std::invalid_argument("RationalTF: denominator is the zero polynomial");
    }
    if (num_.is_zero()) {
        den_ = Polynomial::constant(1.0);
        return;
    }
    // Exact common factors of s (zero low-order coefficients on both sides) are removed.
    const auto n = num_.coefficients();
    const auto d0 = den_.coefficients();
    std::size_t common = 0;
    while (common < n.size() - 1 && common < d0.size() - 1 && n[common] == 0.0 && d0[common] == 0.0) {
        ++common;
    }
    if (common > 0) {
        num_ = Polynomial(std::vector<double>(n.begin() + static_cast<std::ptrdiff_t>(common), n.end()));
        den_ = Polynomial(std::vector<double>(d0.begin() + static_cast<std::ptrdiff_t>(common), d0.end()));
    }
    // Normalise so the largest-magnitude denominator coefficient is exactly 1.
    const auto d = den_.coefficients();
    double pivot = d[0];
    for (double c : d) {
        if (std::abs(c) > std::abs(pivot)) {
            pivot = c;
        }
    }
    if (pivot != 1.0) {
        num_ = num_.scaled(1.0 / pivot);
        den_ = den_.scaled(1.0 / pivot);
    }
}

ComplexResponse make_response(double frequency_hz, Complex value) {
    ComplexResponse r;
    r.frequency = frequency_hz;
    r.value = value;
    r.magnitude_db = 20.0 * std::log10(std::abs(value));
    double ph = std::atan2(value.imag(), value.real()) * 180.0 / std::numbers::pi;
    if (ph <= -180.0) {
        ph += 360.0;
    }
    r.phase_deg = ph;
    return r;
}

RationalTF canonical(const RationalTF& tf) {
    return RationalTF(tf.num(), tf.den());
}

RationalTF tf_add(const RationalTF& a, const RationalTF& b) {
    if (a.is_zero()) {
        return b;
    }
    if (b.is_zero()) {
        return a;
    }
    if (a.den() == b.den()) {
        return {a.num() + b.num(), a.den()};
    }
    return {a.num() * b.den() + b.num() * a.den(), a.den() * b.den()};
}

RationalTF tf_sub(const RationalTF& a, const RationalTF& b) {
    return tf_add(a, RationalTF(b.num().scaled(-1.0), b.den()));
}

RationalTF tf_mul(const RationalTF& a, const RationalTF& b) {
    return {a.num() * b.num(), a.den() * b.den()};
}

RationalTF tf_div(const RationalTF& a, const RationalTF& b) {
    if (b.is_zero()) {
        throw std::invalid_argument("tf_div: division by the zero transfer function");
    }
    return {a.num() * b.den(), a.den() * b.num()};
}

RationalTF tf_parallel(const RationalTF& a, const RationalTF& b) {
    // na nb / (na db + nb da): the product of the denominators cancels exactly.
    Polynomial den = a.num() * b.den() + b.num() * a.den();
    if (den.is_zero()) {
        throw DegenerateParallel("tf_parallel: a + b is identically zero");
    }
    return {a.num() * b.num(), std::move(den)};
}

RationalTF tf_feedback(const RationalTF& forward, const RationalTF& feedback) {
    Polynomial den = forward.den() * feedback.den() + forward.num() * feedback.num();
    if (den.is_zero()) {
        throw DegenerateLoop("tf_feedback: 1 + forward*feedback is identically zero");
    }
    return {forward.num() * feedback.den(), std::move(den)};
}

ComplexResponse tf_eval(const RationalTF& tf, double frequency_hz) {
    const Complex s(0.0, 2.0 * std::numbers::pi * frequency_hz);
    const Complex d = tf.den().eval(s);
    if (std::abs(d) < 1e-12 * tf.den().eval_scale(s)) {
        throw NearPole("tf_eval: evaluation at " + std::to_string(frequency_hz) + " Hz is at a pole");
    }
    return make_response(frequency_hz, tf.num().eval(s) / d);
}

}  // namespace dcpass
