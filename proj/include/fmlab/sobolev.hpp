#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fmlab/fit.hpp"
#include "fmlab/grid.hpp"
#include "fmlab/parallel.hpp"

namespace fmlab {

struct SobolevParams {
    double s = 0.5;
    double r = 2.0;

    SobolevParams(double s_, double r_) : s(s_), r(r_) {
        require_domain(s > 0, "SobolevParams: s must be positive");
        require_domain(r > 1 && std::isfinite(r), "SobolevParams: r must lie in (1, inf)");
    }
    double alpha(int d) const { return s - double(d) / r; }
};

struct AnisoParams {
    std::vector<double> s_vec;

    explicit AnisoParams(std::vector<double> s) : s_vec(std::move(s)) {
        require(!s_vec.empty(), "AnisoParams: empty order vector");
        for (double v : s_vec) require_domain(v > 0, "AnisoParams: orders must be positive");
    }
    double ell() const {
        double l = 0;
        for (double v : s_vec) l += 1.0 / v;
        return l;
    }
    double alpha(std::size_t axis) const { return s_vec.at(axis) * (1.0 - ell() / 2.0); }
};

// (sum_{k != 0} |k|^{2s} |c(k)|^2)^{1/2} over the box, Euclidean |k|.
inline double hs_seminorm(const CoeffField& c, double s) {
    require_domain(s > 0, "hs_seminorm: s must be positive");
    double acc = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        auto k = c.box.freq(i);
        double k2 = double(k[0]) * k[0] + double(k[1]) * k[1];
        if (k2 == 0) continue;
        acc += std::pow(k2, s) * std::norm(c.coeffs[i]);
    }
    return std::sqrt(acc);
}

// Squared seminorm restricted to the cubes |k|_inf <= N, one point per N.
inline ScanSeries hs_partial_sums(const CoeffField& c, double s, const std::vector<int>& Ns) {
    require_domain(s > 0, "hs_partial_sums: s must be positive");
    ScanSeries out("hs_partial_sums");
    for (int N : Ns) {
        require(N <= c.box.N, "hs_partial_sums: N exceeds the coefficient box");
        out.push(N, std::pow(hs_seminorm(rebox(c, FreqBox(c.box.d, N)), s), 2));
    }
    return out;
}

inline double aniso_seminorm(const CoeffField& c, const AnisoParams& p) {
    require(p.s_vec.size() == std::size_t(c.box.d), "aniso_seminorm: order vector length must equal d");
    double acc = 0;
    for (std::size_t i = 0; i < c.size(); ++i) {
        auto k = c.box.freq(i);
        double w = 0;
        for (int j = 0; j < c.box.d; ++j) w += std::pow(std::abs(double(k[j])), 2 * p.s_vec[j]);
        acc += w * std::norm(c.coeffs[i]);
    }
    return std::sqrt(acc);
}

namespace detail {

// Periodic offset m in [-n/2, n/2) as a coordinate.
inline double offset(int m, int n) { return double(m) / n; }

// sum_x |f(x+y) - f(x)|^2 for every offset y, through the autocorrelation.
inline std::vector<double> difference_energy(const SampleField& f) {
    const auto& g = f.grid;
    std::vector<cplx> F = f.values;
    fft_nd(F, g.d(), g.n(), false);
    double energy = 0;
    for (const auto& z : f.values) energy += std::norm(z);
    for (auto& z : F) z = std::norm(z);
    fft_nd(F, g.d(), g.n(), true);
    std::vector<double> D(g.size());
    const double inv = 1.0 / double(g.size());
    for (std::size_t i = 0; i < D.size(); ++i) D[i] = std::max(0.0, 2 * energy - 2 * F[i].real() * inv);
    return D;
}

}  // namespace detail

struct SlobodeckijOptions {
    bool force_direct = false;  // skip the r = 2 autocorrelation shortcut
    int workers = 1;
};

// Double Riemann sum of |f(x+y)-f(x)|^r / |y|^{d+sr} over all grid pairs with
// y != 0, r-th root taken.
inline double slobodeckij_seminorm(const SampleField& f, double s, double r, const SlobodeckijOptions& opt = {}) {
    require_domain(s > 0 && s < 1, "slobodeckij_seminorm: s must lie in (0,1)");
    require_domain(r >= 1 && std::isfinite(r), "slobodeckij_seminorm: r must be finite and >= 1");
    const auto& g = f.grid;
    const int n = g.n(), d = g.d();
    const double expo = d + s * r;
    const double w2 = g.cell_volume() * g.cell_volume();

    auto weight = [&](int m1, int m2) {
        double y1 = detail::offset(m1, n), y2 = detail::offset(m2, n);
        return std::pow(y1 * y1 + y2 * y2, -expo / 2);
    };
    auto signed_offset = [&](int i) { return i < n / 2 ? i : i - n; };

    double total = 0;
    if (r == 2.0 && !opt.force_direct) {
        auto D = detail::difference_energy(f);
        for (std::size_t idx = 0; idx < D.size(); ++idx) {
            if (idx == 0) continue;
            auto m = g.multi(idx);
            total += D[idx] * weight(signed_offset(m[0]), d == 1 ? 0 : signed_offset(m[1]));
        }
    } else {
        const std::size_t M = g.size();
        auto partial = parallel_map<double>(M, opt.workers, [&](std::size_t off) {
            if (off == 0) return 0.0;
            auto m = g.multi(off);
            double acc = 0;
            for (std::size_t x = 0; x < M; ++x) {
                auto xi = g.multi(x);
                std::size_t y = d == 1 ? std::size_t((xi[0] + m[0]) % n)
                                       : g.index((xi[0] + m[0]) % n, (xi[1] + m[1]) % n);
                acc += std::pow(std::abs(f.values[y] - f.values[x]), r);
            }
            return acc * weight(signed_offset(m[0]), d == 1 ? 0 : signed_offset(m[1]));
        });
        for (double v : partial) total += v;
    }
    return std::pow(total * w2, 1.0 / r);
}

// Spectral derivative D^gamma f, using the largest box the grid resolves.
inline SampleField spectral_derivative(const SampleField& f, int g1, int g2 = 0) {
    const auto& g = f.grid;
    FreqBox box(g.d(), g.n() / 2 - 1);
    auto c = analyze(f, box);
    for (std::size_t i = 0; i < c.size(); ++i) {
        auto k = box.freq(i);
        cplx m = std::pow(cplx(0, 2 * pi * k[0]), g1);
        if (g.d() == 2) m *= std::pow(cplx(0, 2 * pi * k[1]), g2);
        c.coeffs[i] *= m;
    }
    return synthesize(c, g);
}

// General order s > 0: integer part through spectral derivatives, fractional
// part through the Slobodeckij sum.  Integer s gives the derivative L^r norm.
inline double sobolev_seminorm(const SampleField& f, double s, double r, const SlobodeckijOptions& opt = {}) {
    require_domain(s > 0, "sobolev_seminorm: s must be positive");
    if (s < 1) return slobodeckij_seminorm(f, s, r, opt);
    const int k = int(std::floor(s));
    const double frac = s - k;
    std::vector<std::array<int, 2>> gammas;
    if (f.grid.d() == 1)
        gammas.push_back({k, 0});
    else
        for (int a = 0; a <= k; ++a) gammas.push_back({a, k - a});
    double acc = 0;
    for (auto gm : gammas) {
        auto Df = spectral_derivative(f, gm[0], gm[1]);
        double v = frac > 1e-12 ? slobodeckij_seminorm(Df, frac, r, opt) : lp_norm(Df, r);
        acc += std::pow(v, r);
    }
    return std::pow(acc, 1.0 / r);
}

// Seminorm^r of samples of f on grids of increasing resolution.
inline ScanSeries slobodeckij_refinement(const std::function<cplx(const Point&)>& f, int d,
                                         const std::vector<int>& ns, double s, double r,
                                         const SlobodeckijOptions& opt = {}) {
    ScanSeries out("slobodeckij_refinement");
    for (int n : ns) {
        TorusGrid g(d, n);
        out.push(n, std::pow(slobodeckij_seminorm(sample(g, f), s, r, opt), r));
    }
    return out;
}

// Sum over both axes of the line-averaged 1-d seminorm^r of the restrictions
// to axis-parallel lines.  The returned quantity is an r-th power; for d = 1
// it is slobodeckij_seminorm(f)^r.
inline double line_restriction_seminorm(const SampleField& f, double s, double r) {
    const auto& g = f.grid;
    if (g.d() == 1) return std::pow(slobodeckij_seminorm(f, s, r), r);
    const int n = g.n();
    TorusGrid line(1, n);
    double total = 0;
    for (int axis = 0; axis < 2; ++axis) {
        double acc = 0;
        for (int other = 0; other < n; ++other) {
            SampleField restr(line);
            for (int t = 0; t < n; ++t)
                restr.values[t] = axis == 0 ? f.values[g.index(t, other)] : f.values[g.index(other, t)];
            acc += std::pow(slobodeckij_seminorm(restr, s, r), r);
        }
        total += acc / n;
    }
    return total;
}

struct Ball {
    Point center{0, 0};
    double radius = 0;
};

// Grid indices within periodic Euclidean distance `radius` of `center`.
inline std::vector<std::size_t> ball_indices(const TorusGrid& g, const Ball& b) {
    std::vector<std::size_t> out;
    const int n = g.n();
    const int span = int(std::ceil(b.radius * n)) + 1;
    const std::size_t c = g.nearest(b.center);
    auto cm = g.multi(c);
    auto dist2 = [&](const Point& p) {
        double a = wrap(p[0] - b.center[0]);
        double z = g.d() == 2 ? wrap(p[1] - b.center[1]) : 0.0;
        return a * a + z * z;
    };
    const double r2 = b.radius * b.radius * (1 + 1e-12);
    if (span * 2 + 1 >= n) {
        for (std::size_t i = 0; i < g.size(); ++i)
            if (dist2(g.point(i)) <= r2) out.push_back(i);
        return out;
    }
    for (int a = -span; a <= span; ++a) {
        int i1 = detail::mod(cm[0] + a, n);
        if (g.d() == 1) {
            if (dist2(g.point(i1)) <= r2) out.push_back(i1);
            continue;
        }
        for (int z = -span; z <= span; ++z) {
            std::size_t idx = g.index(i1, detail::mod(cm[1] + z, n));
            if (dist2(g.point(idx)) <= r2) out.push_back(idx);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

namespace detail {

// int over the unit cell centered at offset o of |u|^a, a > -d.  The origin cell is
// done in polar form (1D: closed form).
inline double cell_moment(int d, int o1, int o2, double a) {
    if (o1 == 0 && o2 == 0) {
        if (d == 1) return 2 * std::pow(0.5, a + 1) / (a + 1);
        // 4 int_{-pi/4}^{pi/4} int_0^{1/(2 cos t)} rho^{a+1} d rho dt
        auto f = [&](double t) { return std::pow(0.5 / std::cos(t), a + 2) / (a + 2); };
        return 4 * boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, -pi / 4, pi / 4, 10, 1e-13);
    }
    static const double x[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
                                0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
    static const double w[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
                                0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
    double acc = 0;
    for (int i = 0; i < 8; ++i) {
        const double u = o1 + 0.5 * x[i];
        if (d == 1) {
            acc += 0.5 * w[i] * std::pow(std::abs(u), a);
            continue;
        }
        for (int k = 0; k < 8; ++k) {
            const double v = o2 + 0.5 * x[k];
            acc += 0.25 * w[i] * w[k] * std::pow(u * u + v * v, a / 2);
        }
    }
    return acc;
}

}  // namespace detail

// Slobodeckij seminorm^r of f restricted to a ball (both points in the ball).
// Kernel weights depend only on the integer offset and are tabulated.  Near
// offsets use cell-averaged weights that are exact for linear f, and the
// diagonal cell is added through the local difference quotient.
inline double ball_slobodeckij_pow(const SampleField& f, const Ball& b, double s, double r) {
    require_domain(s > 0 && s < 1, "ball_slobodeckij_pow: s must lie in (0,1)");
    const auto& g = f.grid;
    const int n = g.n();
    const int d = g.d();
    auto idx = ball_indices(g, b);
    const double expo = (d + s * r) / 2;
    const int span = std::min(n / 2, 2 * (int(std::ceil(b.radius * n)) + 1));
    const int side = 2 * span + 1;
    const int near = 3;
    const double hscale = std::pow(double(n), d + s * r);
    std::vector<double> kern(d == 1 ? std::size_t(side) : std::size_t(side) * side, 0.0);
    for (int a = -span; a <= span; ++a)
        for (int c = (d == 1 ? 0 : -span); c <= (d == 1 ? 0 : span); ++c) {
            if (a == 0 && c == 0) continue;
            const double o2 = double(a) * a + double(c) * c;
            double k;
            if (std::abs(a) <= near && std::abs(c) <= near)
                k = hscale * detail::cell_moment(d, a, c, r - d - s * r) / std::pow(o2, r / 2);
            else
                k = std::pow(o2 / (double(n) * n), -expo);
            kern[d == 1 ? std::size_t(a + span) : std::size_t(a + span) * side + (c + span)] = k;
        }
    std::vector<std::array<int, 2>> pos;
    std::vector<cplx> val;
    for (auto i : idx) {
        pos.push_back(g.multi(i));
        val.push_back(f.values[i]);
    }
    auto off = [&](int a, int c) {
        int dd = detail::mod(a - c, n);
        if (dd > n / 2) dd -= n;
        return dd;
    };
    const bool sq = r == 2.0;
    double acc = 0;
    for (std::size_t a = 0; a < idx.size(); ++a) {
        double row = 0;
        for (std::size_t c = a + 1; c < idx.size(); ++c) {
            const int o1 = off(pos[c][0], pos[a][0]);
            const std::size_t k = d == 1 ? std::size_t(o1 + span)
                                         : std::size_t(o1 + span) * side + (off(pos[c][1], pos[a][1]) + span);
            const double diff = sq ? std::norm(val[c] - val[a]) : std::pow(std::abs(val[c] - val[a]), r);
            row += diff * kern[k];
        }
        acc += row;
    }
    const double vol = g.cell_volume();
    double out = 2 * acc * vol * vol;

    // diagonal cell: |grad f|^r <|cos|^r> h^{r(1-s)} int_{cell} |u|^{r(1-s)-d} per unit volume
    const double cosr = d == 1 ? 1.0 : std::tgamma((r + 1) / 2) / (std::sqrt(pi) * std::tgamma(r / 2 + 1));
    const double diag = cosr * std::pow(1.0 / n, r * (1 - s)) * detail::cell_moment(d, 0, 0, r * (1 - s) - d);
    double gsum = 0;
    for (auto i : idx) {
        auto m = g.multi(i);
        double gr2 = 0;
        for (int ax = 0; ax < d; ++ax) {
            auto p = m, q = m;
            p[ax] = detail::mod(p[ax] + 1, n);
            q[ax] = detail::mod(q[ax] - 1, n);
            gr2 += std::norm((f.values[g.index(p[0], p[1])] - f.values[g.index(q[0], q[1])]) * (0.5 * n));
        }
        gsum += std::pow(gr2, r / 2);
    }
    return out + diag * gsum * vol;
}

inline double ball_lp_norm(const SampleField& f, const Ball& b, double r) {
    double acc = 0;
    for (auto i : ball_indices(f.grid, b)) acc += std::pow(std::abs(f.values[i]), r);
    return std::pow(acc * f.grid.cell_volume(), 1.0 / r);
}

// Pairs (x, x+y) with t_min <= |y| <= t_max; optionally both points inside a ball.
struct ScaleWindow {
    double t_min = 0;
    double t_max = 0.5;
    bool restrict_region = false;
    Ball region;
};

namespace detail {

inline double holder_scan(const SampleField& f, double alpha, const ScaleWindow& w, int only_axis) {
    require_domain(alpha > 0 && alpha < 1, "holder_quotient: alpha must lie in (0,1)");
    const auto& g = f.grid;
    const int n = g.n(), d = g.d();
    std::vector<std::size_t> base;
    std::vector<char> inside;
    if (w.restrict_region) {
        base = ball_indices(g, w.region);
        inside.assign(g.size(), 0);
        for (auto i : base) inside[i] = 1;
    } else {
        base.resize(g.size());
        std::iota(base.begin(), base.end(), std::size_t(0));
    }
    const int mmax = std::min(n / 2, int(std::floor(w.t_max * n + 1e-9)));
    std::vector<std::array<int, 2>> offs;
    std::vector<double> len;
    for (int a = -mmax; a <= mmax; ++a) {
        for (int b = (d == 2 ? -mmax : 0); b <= (d == 2 ? mmax : 0); ++b) {
            if (only_axis == 0 && b != 0) continue;
            if (only_axis == 1 && a != 0) continue;
            double t = std::sqrt(double(a) * a + double(b) * b) / n;
            if (t == 0 || t < w.t_min * (1 - 1e-12) || t > w.t_max * (1 + 1e-12)) continue;
            offs.push_back({a, b});
            len.push_back(t);
        }
    }
    double best = 0;
    bool any = false;
    for (auto x : base) {
        auto xm = g.multi(x);
        for (std::size_t o = 0; o < offs.size(); ++o) {
            std::size_t y = d == 1 ? std::size_t(mod(xm[0] + offs[o][0], n))
                                   : g.index(mod(xm[0] + offs[o][0], n), mod(xm[1] + offs[o][1], n));
            if (w.restrict_region && !inside[y]) continue;
            any = true;
            best = std::max(best, std::abs(f.values[y] - f.values[x]) / std::pow(len[o], alpha));
        }
    }
    require(any, "holder_quotient: empty scale window");
    return best;
}

}  // namespace detail

inline double holder_quotient(const SampleField& f, double alpha, const ScaleWindow& w) {
    return detail::holder_scan(f, alpha, w, -1);
}

// Quotient along axis e_axis only (mixed Hoelder regularity).
inline double axis_holder_quotient(const SampleField& f, int axis, double alpha, const ScaleWindow& w) {
    require(axis >= 0 && axis < f.grid.d(), "axis_holder_quotient: bad axis");
    return detail::holder_scan(f, alpha, w, axis);
}

}  // namespace fmlab
