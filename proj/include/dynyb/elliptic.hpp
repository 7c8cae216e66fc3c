// Theta-function family used by the vertex, face and ABF models.
//
// Jacobi form with half periods K and iK', nome p:
//   H(z)     = 2 sum_{n>=1} (-1)^{n-1} p^{(n-1/2)^2} sin((2n-1) pi z / 2K)
//   Theta(z) = 1 + 2 sum_{n>=1} (-1)^n p^{n^2} cos(n pi z / K)
//   h(z)     = zeta H(lambda z) Theta(lambda z)
// Odd theta in tau form:
//   theta(z, tau) = - sum_{n in Z} exp(i pi (n+1/2)^2 tau + 2 pi i (n+1/2)(z+1/2))
//   [z]           = theta(z/(2L-2)) / (theta'(0)/(2L-2))

#ifndef DYNYB_ELLIPTIC_HPP
#define DYNYB_ELLIPTIC_HPP

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>

namespace dynyb {

using cplx = std::complex<double>;

inline constexpr double pi = 3.14159265358979323846;

namespace detail {
inline constexpr double series_rel_tol = 1e-17;
inline constexpr int series_max_terms = 10000;

// p^e for a real exponent, principal branch.
inline cplx nome_pow(cplx p, double e) {
    if (p == cplx(0.0)) return e == 0.0 ? cplx(1.0) : cplx(0.0);
    return std::exp(e * std::log(p));
}
}  // namespace detail

inline cplx euler_phi(cplx p) {
    if (std::abs(p) >= 1.0) throw std::domain_error("euler_phi: |p| >= 1");
    cplx prod = 1.0, pk = p;
    for (int k = 1; k <= detail::series_max_terms; ++k) {
        if (std::abs(pk) < detail::series_rel_tol) break;
        prod *= 1.0 - pk;
        pk *= p;
    }
    return prod;
}

struct EllipticParams {
    cplx p = 0.1;
    double K = 1.0;
    cplx lambda = 0.1;
    cplx zeta = 1.0;

    // zeta = p^{-1/8} phi(p) / phi(p^2)^2
    static EllipticParams make(cplx p, cplx lambda, double K = 1.0) {
        if (std::abs(p) >= 1.0) throw std::domain_error("EllipticParams: |p| >= 1");
        if (!(K > 0.0)) throw std::domain_error("EllipticParams: K <= 0");
        EllipticParams e;
        e.p = p;
        e.K = K;
        e.lambda = lambda;
        cplx f2 = euler_phi(p * p);
        e.zeta = detail::nome_pow(p, -0.125) * euler_phi(p) / (f2 * f2);
        return e;
    }
};

inline cplx jacobi_H(cplx z, const EllipticParams& e) {
    const double ap = std::abs(e.p);
    if (ap >= 1.0) throw std::domain_error("jacobi_H: |p| >= 1");
    if (ap == 0.0) return 0.0;
    const double growth = pi * std::abs(z.imag()) / (2.0 * e.K);
    const double lap = std::log(ap);
    cplx sum = 0.0;
    double bmax = 0.0;
    for (int n = 1; n <= detail::series_max_terms; ++n) {
        const double m = n - 0.5;
        const double logb = m * m * lap + (2 * n - 1) * growth;
        const double b = std::exp(logb);
        bmax = std::max(bmax, b);
        if (n > 1 && b < detail::series_rel_tol * bmax) break;
        const double sgn = (n % 2 == 1) ? 1.0 : -1.0;
        sum += sgn * detail::nome_pow(e.p, m * m) * std::sin((2.0 * n - 1.0) * pi * z / (2.0 * e.K));
    }
    return 2.0 * sum;
}

inline cplx jacobi_Theta(cplx z, const EllipticParams& e) {
    const double ap = std::abs(e.p);
    if (ap >= 1.0) throw std::domain_error("jacobi_Theta: |p| >= 1");
    if (ap == 0.0) return 1.0;
    const double growth = pi * std::abs(z.imag()) / e.K;
    const double lap = std::log(ap);
    cplx sum = 0.0;
    double bmax = 1.0;
    for (int n = 1; n <= detail::series_max_terms; ++n) {
        const double b = std::exp(double(n) * n * lap + n * growth);
        bmax = std::max(bmax, b);
        if (b < detail::series_rel_tol * bmax) break;
        const double sgn = (n % 2 == 1) ? -1.0 : 1.0;
        sum += sgn * detail::nome_pow(e.p, double(n) * n) * std::cos(double(n) * pi * z / e.K);
    }
    return 1.0 + 2.0 * sum;
}

inline cplx h(cplx z, const EllipticParams& e) {
    return e.zeta * jacobi_H(e.lambda * z, e) * jacobi_Theta(e.lambda * z, e);
}

struct ThetaParams {
    cplx tau{0.0, 1.2};
    int L = 4;
    int period() const { return 2 * L - 2; }
};

namespace detail {
// Pairs n with -n-1: both share (n+1/2)^2, the z-parts combine into a cosine.
inline cplx theta_sum(cplx z, cplx tau, bool derivative) {
    const double it = tau.imag();
    const double grow = 2.0 * pi * std::abs(z.imag());
    cplx sum = 0.0;
    double bmax = 0.0;
    for (int n = 0; n <= series_max_terms; ++n) {
        const double m = n + 0.5;
        const double b = std::exp(-pi * it * m * m + grow * m) * (derivative ? 2.0 * pi * m : 1.0);
        bmax = std::max(bmax, b);
        if (n > 0 && b < 1e-18 * bmax) break;
        const cplx q = std::exp(cplx(0.0, pi) * m * m * tau);
        const cplx arg = 2.0 * pi * m * (z + 0.5);
        if (derivative)
            sum -= q * 4.0 * pi * m * std::sin(arg);
        else
            sum += q * 2.0 * std::cos(arg);
    }
    return -sum;
}
}  // namespace detail

inline cplx theta_odd(cplx z, cplx tau) {
    if (!(tau.imag() > 0.0)) throw std::domain_error("theta_odd: Im tau <= 0");
    return detail::theta_sum(z, tau, false);
}

inline cplx theta_odd_prime0(cplx tau) {
    if (!(tau.imag() > 0.0)) throw std::domain_error("theta_odd: Im tau <= 0");
    return detail::theta_sum(0.0, tau, true);
}

inline cplx bracket(cplx z, const ThetaParams& t) {
    const double g = t.period();
    const cplx d = theta_odd_prime0(t.tau);
    if (std::abs(d) < 1e-12) throw std::domain_error("bracket: theta'(0) vanishes");
    return theta_odd(z / g, t.tau) / (d / g);
}

inline cplx trig_bracket(cplx z, int g) {
    if (g < 2) throw std::domain_error("trig_bracket: g < 2");
    return std::sin(pi * z / double(g));
}

}  // namespace dynyb

#endif
