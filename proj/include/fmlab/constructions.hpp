#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "fmlab/fit.hpp"
#include "fmlab/grid.hpp"

namespace fmlab {

struct BetaParams {
    double beta = 0.3;
    int d = 1;

    BetaParams(double b, int d_ = 1) : beta(b), d(d_) {
        require_domain(beta > 0 && beta < 1, "BetaParams: beta must lie in (0,1)");
        require(d == 1 || d == 2, "BetaParams: d must be 1 or 2");
    }
};

// S(t) = psi(t) / (psi(t) + psi(1-t)), psi(t) = exp(-1/t) for t > 0: a C-infinity
// step from 0 (t <= 0) to 1 (t >= 1).
inline double smooth_step(double t) {
    if (t <= 0) return 0;
    if (t >= 1) return 1;
    const double a = std::exp(-1.0 / t), b = std::exp(-1.0 / (1.0 - t));
    return a / (a + b);
}

// eta(r) = 1 - S(8r - 1): equal to 1 for r <= 1/8 and 0 for r >= 1/4.
inline double bump_eta(double r) { return 1.0 - smooth_step(8.0 * std::abs(r) - 1.0); }

inline double periodic_radius(const Point& x, int d) {
    const double a = wrap(x[0]);
    if (d == 1) return std::abs(a);
    const double b = wrap(x[1]);
    return std::sqrt(a * a + b * b);
}

inline double bump_eta(const Point& x, int d) { return bump_eta(periodic_radius(x, d)); }

inline double w_beta_radial(double beta, double r) {
    const double e = bump_eta(r);
    return (1.0 - e) + e * std::pow(r, beta);
}

// w_beta = (1 - eta) + eta |x|^beta, Z^d-periodic.
inline double w_beta_value(const BetaParams& p, const Point& x) {
    return w_beta_radial(p.beta, periodic_radius(x, p.d));
}

inline SampleField w_beta(const BetaParams& p, const TorusGrid& g) {
    require(g.d() == p.d, "w_beta: grid dimension differs from BetaParams::d");
    return sample(g, [&](const Point& x) { return w_beta_value(p, x); });
}

// h_beta(x) = (1/2 - |x|)^{beta/2} on [-1/2, 1/2], 0 elsewhere.
inline double h_beta_value(double beta, double x) {
    const double a = std::abs(x);
    return a >= 0.5 ? 0.0 : std::pow(0.5 - a, beta / 2);
}

// h_beta on the unit cell, i.e. its 1-periodization.
inline SampleField h_beta_field(double beta, const TorusGrid& g) {
    require(g.d() == 1, "h_beta_field: d must be 1");
    return sample(g, [&](const Point& x) { return h_beta_value(beta, x[0]); });
}

// Fourier transform 2 int_0^{1/2} cos(2 pi x xi) (1/2 - x)^{beta/2} dx.  With
// y = 1/2 - x the piece y < min(1/2, 1/xi) carries the endpoint singularity
// and goes to tanh-sinh; the rest is cut into full periods for Gauss-Kronrod.
inline double h_beta_transform(double beta, double xi) {
    require_domain(beta > 0 && beta < 1, "h_beta_transform: beta must lie in (0,1)");
    using boost::math::quadrature::gauss_kronrod;
    using boost::math::quadrature::tanh_sinh;
    const double nu = beta / 2;
    xi = std::abs(xi);
    if (xi == 0) return 2 * std::pow(0.5, nu + 1) / (nu + 1);
    auto f = [&](double y) { return std::cos(2 * pi * xi * (0.5 - y)) * std::pow(y, nu); };
    const double split = std::min(0.5, 1.0 / xi);
    static thread_local tanh_sinh<double> ts;
    double near = ts.integrate(f, 0.0, split);
    double far = 0;
    if (split < 0.5) {
        const double period = 1.0 / xi;
        double a = split;
        while (a < 0.5) {
            const double b = std::min(0.5, a + period);
            far += gauss_kronrod<double, 15>::integrate(f, a, b, 2, 1e-6);
            a = b;
        }
    }
    return 2 * (near + far);
}

// Periodized h_beta has Fourier coefficients equal to its transform at
// the integers (support inside one period).
inline CoeffField h_beta_coeffs(double beta, const FreqBox& box) {
    require(box.d == 1, "h_beta_coeffs: d must be 1");
    CoeffField c(box);
    std::vector<double> half(box.N + 1);
    for (int k = 0; k <= box.N; ++k) half[k] = h_beta_transform(beta, k);
    for (int k = -box.N; k <= box.N; ++k) c.at(k) = half[std::abs(k)];
    return c;
}

// Frequency-side generator prod_i h_beta(xi_i).  Its spatial counterpart is
// the product of h_beta_transform factors (tensor_F_beta_spatial).
inline std::function<double(const Point&)> tensor_F_beta(double beta, int d) {
    require_domain(beta > 0 && beta < 1, "tensor_F_beta: beta must lie in (0,1)");
    require(d == 1 || d == 2, "tensor_F_beta: d must be 1 or 2");
    return [beta, d](const Point& x) {
        double v = h_beta_value(beta, x[0]);
        if (d == 2) v *= h_beta_value(beta, x[1]);
        return v;
    };
}

inline std::function<double(const Point&)> tensor_F_beta_spatial(double beta, int d) {
    require(d == 1 || d == 2, "tensor_F_beta_spatial: d must be 1 or 2");
    return [beta, d](const Point& x) {
        double v = h_beta_transform(beta, x[0]);
        if (d == 2) v *= h_beta_transform(beta, x[1]);
        return v;
    };
}

// int_{|x| > eps} |w_beta|^{-p} over the torus, p = 2q/(q-2), for eps = 2^-j.
// w_beta is radial inside B_{1/4} and equal to 1 outside, so the integral
// reduces to a radial quadrature.
inline ScanSeries reciprocal_integrability_scan(const BetaParams& bp, double q, const std::vector<int>& js) {
    require_domain(q > 2, "reciprocal_integrability_scan: q must exceed 2");
    using boost::math::quadrature::gauss_kronrod;
    const double p = 2 * q / (q - 2);
    auto integrand = [&](double r) {
        const double jac = bp.d == 1 ? 2.0 : 2 * pi * r;
        return jac * std::pow(w_beta_radial(bp.beta, r), -p);
    };
    const double outside = bp.d == 1 ? 0.5 : 1.0 - pi / 16;
    double acc = outside + gauss_kronrod<double, 31>::integrate(integrand, 0.125, 0.25, 15, 1e-13);
    ScanSeries out("reciprocal_integrability");
    int j_done = 3;  // accumulated down to 2^-3
    for (int j : js) {
        require(j >= 3, "reciprocal_integrability_scan: cutoffs must be 2^-j with j >= 3");
        while (j_done < j) {
            const double a = std::ldexp(1.0, -(j_done + 1)), b = std::ldexp(1.0, -j_done);
            acc += gauss_kronrod<double, 31>::integrate(integrand, a, b, 15, 1e-13);
            ++j_done;
        }
        out.push(std::ldexp(1.0, j), acc);
    }
    return out;
}

}  // namespace fmlab
