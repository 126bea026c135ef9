#pragma once

// Rational transfer functions in the Laplace variable s.
//
// Polynomials are dense, ascending-power, real-coefficient. A RationalTF is
// always held in canonical form: trailing (highest-order) zeros trimmed from
// numerator and denominator, and the denominator scaled so that its
// largest-magnitude coefficient is exactly 1. A zero numerator is stored as
// 0/1. Apart from exact common powers of s, no pole-zero cancellation is ever
// attempted; two transfer functions are compared by sampling their frequency
// responses.

#include <algorithm>
#include <complex>
#include <initializer_list>
#include <span>
#include <vector>

namespace dcpass {

using Complex = std::complex<double>;

class Polynomial {
public:
    Polynomial() : coeffs_{0.0} {}
    Polynomial(std::initializer_list<double> ascending) : Polynomial(std::vector<double>(ascending)) {}
    explicit Polynomial(std::vector<double> ascending);

    static Polynomial constant(double c) { return Polynomial({c}); }
    /// The monomial s.
    static Polynomial s() { return Polynomial({0.0, 1.0}); }

    std::span<const double> coefficients() const { return coeffs_; }
    double operator[](std::size_t k) const { return k < coeffs_.size() ? coeffs_[k] : 0.0; }
    std::size_t degree() const { return coeffs_.size() - 1; }
    bool is_zero() const { return coeffs_.size() == 1 && coeffs_[0] == 0.0; }
    double max_abs_coefficient() const;

    Complex eval(Complex s) const;
    /// Sum of |c_k| |s|^k; the magnitude scale against which cancellation in eval() is judged.
    double eval_scale(Complex s) const;

    /// Complex roots. Exact zero low-order coefficients produce exact roots at s = 0.
    std::vector<Complex> roots() const;

    Polynomial scaled(double factor) const;

    friend Polynomial operator+(const Polynomial& a, const Polynomial& b);
    friend Polynomial operator-(const Polynomial& a, const Polynomial& b);
    friend Polynomial operator*(const Polynomial& a, const Polynomial& b);
    friend bool operator==(const Polynomial& a, const Polynomial& b) { return a.coeffs_ == b.coeffs_; }

private:
    std::vector<double> coeffs_;  // ascending powers; trailing zeros trimmed, never empty
};

class RationalTF {
public:
    /// The zero transfer function 0/1.
    RationalTF() : RationalTF(Polynomial::constant(0.0), Polynomial::constant(1.0)) {}
    /// Throws std::invalid_argument when den is the zero polynomial.
    RationalTF(Polynomial num, Polynomial den);

    static RationalTF constant(double k) { return {Polynomial::constant(k), Polynomial::constant(1.0)}; }
    static RationalTF s() { return {Polynomial::s(), Polynomial::constant(1.0)}; }
    static RationalTF from_coefficients(std::vector<double> num, std::vector<double> den) {
        return {Polynomial(std::move(num)), Polynomial(std::move(den))};
    }

    const Polynomial& num() const { return num_; }
    const Polynomial& den() const { return den_; }
    bool is_zero() const { return num_.is_zero(); }
    std::size_t order() const { return std::max(num_.degree(), den_.degree()); }

    /// Raw evaluation at a complex point, without the near-pole guard.
    Complex operator()(Complex s) const { return num_.eval(s) / den_.eval(s); }

    std::vector<Complex> poles() const { return den_.roots(); }
    std::vector<Complex> zeros() const { return num_.roots(); }

    friend bool operator==(const RationalTF& a, const RationalTF& b) = default;

private:
    Polynomial num_;
    Polynomial den_;
};

struct ComplexResponse {
    double frequency = 0.0;     // Hz
    Complex value;              // Ohm or dimensionless
    double magnitude_db = 0.0;  // 20 log10 |value|
    double phase_deg = 0.0;     // (-180, 180]
};

ComplexResponse make_response(double frequency_hz, Complex value);

RationalTF canonical(const RationalTF& tf);

RationalTF tf_add(const RationalTF& a, const RationalTF& b);
RationalTF tf_sub(const RationalTF& a, const RationalTF& b);
RationalTF tf_mul(const RationalTF& a, const RationalTF& b);
/// Throws std::invalid_argument when b is identically zero.
RationalTF tf_div(const RationalTF& a, const RationalTF& b);
/// a*b/(a+b). Throws DegenerateParallel when a+b is identically zero.
RationalTF tf_parallel(const RationalTF& a, const RationalTF& b);
/// forward/(1 + forward*feedback). Throws DegenerateLoop when the return difference vanishes.
RationalTF tf_feedback(const RationalTF& forward, const RationalTF& feedback);
/// Response at s = j*2*pi*f. Throws NearPole when |den(jw)| < 1e-12 * sum_k |d_k| w^k.
ComplexResponse tf_eval(const RationalTF& tf, double frequency_hz);

inline RationalTF operator+(const RationalTF& a, const RationalTF& b) { return tf_add(a, b); }
inline RationalTF operator-(const RationalTF& a, const RationalTF& b) { return tf_sub(a, b); }
inline RationalTF operator*(const RationalTF& a, const RationalTF& b) { return tf_mul(a, b); }
inline RationalTF operator/(const RationalTF& a, const RationalTF& b) { return tf_div(a, b); }
inline RationalTF operator-(const RationalTF& a) { return tf_mul(RationalTF::constant(-1.0), a); }
inline RationalTF operator*(double k, const RationalTF& a) { return tf_mul(RationalTF::constant(k), a); }
inline RationalTF operator*(const RationalTF& a, double k) { return tf_mul(a, RationalTF::constant(k)); }
inline RationalTF operator+(double k, const RationalTF& a) { return tf_add(RationalTF::constant(k), a); }
inline RationalTF operator+(const RationalTF& a, double k) { return tf_add(a, RationalTF::constant(k)); }
inline RationalTF operator-(double k, const RationalTF& a) { return tf_sub(RationalTF::constant(k), a); }
inline RationalTF operator-(const RationalTF& a, double k) { return tf_sub(a, RationalTF::constant(k)); }
inline RationalTF operator/(const RationalTF& a, double k) { return tf_div(a, RationalTF::constant(k)); }

}  // namespace dcpass
