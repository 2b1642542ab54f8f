#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fmlab/fit.hpp"
#include "fmlab/grid.hpp"
#include "fmlab/parallel.hpp"
#include "fmlab/sobolev.hpp"

namespace fmlab {

// Threshold eps_j for the cell averages at scale tau_j = 2^-j.
//   fixed:    eps_j = C0 * tau^theta
//   adaptive: fit min_avg_j ~ C tau^theta over the scan, then eps_j = kappa * C * tau^theta.
//             A fitted theta <= theta_floor means |w| does not decay anywhere, and the set is empty.
struct EpsSchedule {
    enum class Mode { fixed, adaptive } mode = Mode::adaptive;
    double C0 = 0;
    double theta = 0;
    double kappa = 1.3;
    double theta_floor = 0.05;

    static EpsSchedule fixed(double c0, double th) {
        EpsSchedule e;
        e.mode = Mode::fixed;
        e.C0 = c0;
        e.theta = th;
        return e;
    }
    // C0 = 0.5 * mean|w|, theta = s.
    static EpsSchedule default_fixed(const SampleField& w, double s) {
        double m = 0;
        for (const auto& z : w.values) m += std::abs(z);
        return fixed(0.5 * m / double(w.values.size()), s);
    }
};

struct ZeroSetScale {
    int j = 0;
    double tau = 0;
    double eps = 0;
    double min_avg = 0;
    std::vector<Point> centers;  // candidate cell centers
    std::size_t count() const { return centers.size(); }
};

struct ZeroSetEstimate {
    std::string label = "box-counting estimate";
    std::vector<ZeroSetScale> scales;
    ExponentFit count_fit;   // log N_j vs log 2^j
    ExponentFit min_fit;     // log min_avg_j vs log tau_j
    double dimension = 0;    // clamped to [0, d]
    double raw_slope = 0;
    bool empty = false;
};

namespace detail {

// Cell averages of |w| over cells of side 2 tau centered at -1/2 + 2 tau c.
// Cell edges sit on grid points, which get half weight (trapezoid closure).
inline std::vector<double> cell_averages(const SampleField& w, double tau, int& per_axis) {
    const auto& g = w.grid;
    const int n = g.n();
    const int half = int(std::lround(tau * n));
    per_axis = n / (2 * half);
    std::vector<double> wt(2 * half + 1, 1.0);
    wt.front() = wt.back() = 0.5;
    const double norm1 = 2.0 * half;
    std::vector<double> a(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) a[i] = std::abs(w.values[i]);
    if (g.d() == 1) {
        std::vector<double> out(per_axis);
        for (int c = 0; c < per_axis; ++c) {
            double s = 0;
            for (int k = -half; k <= half; ++k) s += wt[k + half] * a[mod(2 * half * c + k, n)];
            out[c] = s / norm1;
        }
        return out;
    }
    // separable: average along axis 1 at the cell-center rows, then along axis 0
    std::vector<double> tmp(std::size_t(n) * per_axis);
    for (int i = 0; i < n; ++i)
        for (int c = 0; c < per_axis; ++c) {
            double s = 0;
            for (int k = -half; k <= half; ++k) s += wt[k + half] * a[std::size_t(i) * n + mod(2 * half * c + k, n)];
            tmp[std::size_t(i) * per_axis + c] = s / norm1;
        }
    std::vector<double> out(std::size_t(per_axis) * per_axis);
    for (int c0 = 0; c0 < per_axis; ++c0)
        for (int c1 = 0; c1 < per_axis; ++c1) {
            double s = 0;
            for (int k = -half; k <= half; ++k)
                s += wt[k + half] * tmp[std::size_t(mod(2 * half * c0 + k, n)) * per_axis + c1];
            out[std::size_t(c0) * per_axis + c1] = s / norm1;
        }
    return out;
}

}  // namespace detail

inline ZeroSetEstimate generalized_zero_set(const SampleField& w, const std::vector<int>& js,
                                            const EpsSchedule& sched = {}) {
    require(js.size() >= 3, "generalized_zero_set: need at least 3 scales");
    const auto& g = w.grid;
    const int d = g.d();
    ZeroSetEstimate est;
    std::vector<std::vector<double>> avgs;
    std::vector<int> per;
    for (int j : js) {
        require(j >= 1, "generalized_zero_set: scales must be 2^-j with j >= 1");
        const double tau = std::ldexp(1.0, -j);
        require(2 * tau * g.n() >= 2, "generalized_zero_set: cell side 2 tau below two grid spacings");
        int pa = 0;
        avgs.push_back(detail::cell_averages(w, tau, pa));
        per.push_back(pa);
        ZeroSetScale sc;
        sc.j = j;
        sc.tau = tau;
        sc.min_avg = *std::min_element(avgs.back().begin(), avgs.back().end());
        est.scales.push_back(sc);
    }

    std::vector<double> lt, lm;
    bool any_zero_min = false;
    for (const auto& sc : est.scales) {
        if (sc.min_avg > 0) {
            lt.push_back(std::log(sc.tau));
            lm.push_back(std::log(sc.min_avg));
        } else {
            any_zero_min = true;
        }
    }
    if (lt.size() >= 2) est.min_fit = ols(lt, lm);

    double C = sched.C0, theta = sched.theta;
    if (sched.mode == EpsSchedule::Mode::adaptive) {
        if (any_zero_min) {
            // exact zeros: any positive threshold catches them, use the smallest positive scale
            C = 0;
            theta = 1;
        } else {
            theta = est.min_fit.slope;
            C = sched.kappa * std::exp(est.min_fit.intercept);
            if (theta <= sched.theta_floor) est.empty = true;
        }
    }

    for (std::size_t s = 0; s < est.scales.size(); ++s) {
        auto& sc = est.scales[s];
        const auto& av = avgs[s];
        const int pa = per[s];
        if (est.empty) continue;
        if (sched.mode == EpsSchedule::Mode::adaptive && any_zero_min)
            sc.eps = 0;
        else
            sc.eps = C * std::pow(sc.tau, theta);
        for (std::size_t c = 0; c < av.size(); ++c) {
            const bool hit = (sched.mode == EpsSchedule::Mode::adaptive && any_zero_min) ? av[c] == 0 : av[c] <= sc.eps;
            if (!hit) continue;
            const int c0 = d == 1 ? int(c) : int(c / pa), c1 = d == 1 ? 0 : int(c % pa);
            sc.centers.push_back({-0.5 + 2 * sc.tau * c0, d == 1 ? 0.0 : -0.5 + 2 * sc.tau * c1});
        }
    }

    std::vector<double> lx, ly;
    for (const auto& sc : est.scales)
        if (sc.count() > 0) {
            lx.push_back(sc.j * std::log(2.0));
            ly.push_back(std::log(double(sc.count())));
        }
    if (lx.size() < 3) {
        est.empty = true;
        est.dimension = 0;
        return est;
    }
    est.count_fit = ols(lx, ly);
    est.raw_slope = est.count_fit.slope;
    est.dimension = std::clamp(est.raw_slope, 0.0, double(d));
    return est;
}

struct PoincareReport {
    Point center{0, 0};
    double s = 0, r = 2;
    ScanSeries ratio;   // (1/tau, ||f||_{L^r(B)} / (tau^s [f]_{W^{s,r}(B)}))
    ExponentFit fit;
    double constant = 0;  // max observed ratio
    bool bounded = false;
};

namespace detail {

// ||grad f||_{L^r(B)} with periodic central differences.
inline double ball_gradient_norm(const SampleField& f, const Ball& b, double r) {
    const auto& g = f.grid;
    const int n = g.n();
    double acc = 0;
    for (auto i : ball_indices(g, b)) {
        auto m = g.multi(i);
        double gr2 = 0;
        for (int ax = 0; ax < g.d(); ++ax) {
            auto p = m, q = m;
            p[ax] = mod(p[ax] + 1, n);
            q[ax] = mod(q[ax] - 1, n);
            const cplx dv = (f.values[g.index(p[0], p[1])] - f.values[g.index(q[0], q[1])]) * (0.5 * n);
            gr2 += std::norm(dv);
        }
        acc += std::pow(gr2, r / 2);
    }
    return std::pow(acc * g.cell_volume(), 1.0 / r);
}

inline double ball_seminorm(const SampleField& f, const Ball& b, double s, double r) {
    if (s == 1.0) return ball_gradient_norm(f, b, r);
    return std::pow(ball_slobodeckij_pow(f, b, s, r), 1.0 / r);
}

}  // namespace detail

// Local Poincare inequality ||f||_{L^r(B_tau)} <= C tau^s [f]_{W^{s,r}(B_tau)} at a zero of f.
inline PoincareReport poincare_check(const SampleField& f, const Point& center, const std::vector<double>& taus,
                                     double s, double r = 2, const FitConfig& cfg = fit_config) {
    require_domain(s > 0 && s <= 1, "poincare_check: s must lie in (0,1]");
    require_domain(r >= 1, "poincare_check: r must be >= 1");
    require(taus.size() >= 4, "poincare_check: need at least 4 radii");
    const auto& g = f.grid;
    double fmax = 0;
    for (const auto& z : f.values) fmax = std::max(fmax, std::abs(z));
    require(std::abs(f.values[g.nearest(center)]) <= 1e-8 * fmax, "poincare_check: f does not vanish at the center");
    PoincareReport rep;
    rep.center = center;
    rep.s = s;
    rep.r = r;
    std::vector<double> ts = taus;
    std::sort(ts.begin(), ts.end(), std::greater<>());
    for (double t : ts) {
        require(t * g.n() >= 2, "poincare_check: radius below grid resolution");
        Ball b{center, t};
        const double num = ball_lp_norm(f, b, r);
        const double den = std::pow(t, s) * detail::ball_seminorm(f, b, s, r);
        require(den > 0, "poincare_check: f is constant on a ball");
        const double q = num / den;
        rep.ratio.push(1.0 / t, q);
        rep.constant = std::max(rep.constant, q);
    }
    rep.fit = loglog_fit(rep.ratio);
    rep.bounded = rep.fit.slope <= cfg.slope_tol;
    return rep;
}

struct HausdorffEntry {
    double q = 0;
    double exponent = 0;  // e(q) = r [d (1/2 + 1/r - 1/q) - s]
    ScanSeries lower;     // (1/tau, N_j tau^e)
    ScanSeries quotient;  // (1/tau, N_j tau^e / sum of [w]^r): the summed local inequality
    ExponentFit fit;      // of quotient
    enum class Verdict { obstruction, critical, none } verdict = Verdict::none;
    std::string reason;
    bool binds() const { return verdict == Verdict::obstruction; }
};

inline const char* to_string(HausdorffEntry::Verdict v) {
    switch (v) {
        case HausdorffEntry::Verdict::obstruction: return "obstruction";
        case HausdorffEntry::Verdict::critical: return "critical";
        default: return "none";
    }
}

struct HausdorffScan {
    double sigma = 0, s = 0, r = 2;
    int d = 1;
    ZeroSetEstimate zeros;
    ScanSeries content;   // (1/tau, N_j tau^sigma)
    ScanSeries seminorm;  // (1/tau, sum over candidate balls of [w]^r_{W^{s,r}(B)})
    ExponentFit content_fit, seminorm_fit;
    bool content_bounded_below = false;
    bool seminorm_vanishing = false;
    bool vacuous = false;
    std::vector<HausdorffEntry> entries;
    double q_star = 0;  // d / (d (1/2 + 1/r) - sigma/r - s)
    double q_alt = 0;   // (d - sigma) / (d - sigma - s), infinite when d - sigma <= s
    double q_flip = 0;  // observed flip, 0 if none in the scanned range
    bool has_flip = false;
};

// Contradiction chain over the candidate balls B_k of radius tau:
//   sum tau^sigma <= sum tau^e(q) <~ sum [w]^r_{W^{s,r}(B_k)} -> 0.
// The first link needs e(q) <= sigma.  The measured content must stay bounded
// below and the measured seminorm sums must vanish for the chain to close.
inline HausdorffScan hausdorff_obstruction_scan(const SampleField& w, double sigma, double s, double r,
                                                const std::vector<double>& qs, const std::vector<int>& js,
                                                const EpsSchedule& sched = {}, int workers = 1,
                                                const FitConfig& cfg = fit_config) {
    const int d = w.grid.d();
    require_domain(s > 0 && s < 1, "hausdorff_obstruction_scan: s must lie in (0,1)");
    require_domain(r >= 1, "hausdorff_obstruction_scan: r must be >= 1");
    require_domain(sigma >= 0 && sigma <= d, "hausdorff_obstruction_scan: sigma must lie in [0,d]");
    HausdorffScan out;
    out.sigma = sigma;
    out.s = s;
    out.r = r;
    out.d = d;
    out.q_star = d / (d * (0.5 + 1 / r) - sigma / r - s);
    out.q_alt = d - sigma > s ? (d - sigma) / (d - sigma - s) : INFINITY;
    out.zeros = generalized_zero_set(w, js, sched);
    if (out.zeros.empty) {
        out.vacuous = true;
        for (double q : qs) {
            HausdorffEntry e;
            e.q = q;
            e.exponent = r * (d * (0.5 + 1 / r - 1 / q) - s);
            e.reason = "no candidate balls";
            out.entries.push_back(std::move(e));
        }
        return out;
    }

    std::vector<double> sums(out.zeros.scales.size(), 0.0);
    for (std::size_t k = 0; k < out.zeros.scales.size(); ++k) {
        const auto& sc = out.zeros.scales[k];
        if (sc.count() == 0) continue;
        std::vector<double> part(sc.count());
        parallel_for(sc.count(), workers, [&](std::size_t i) { part[i] = ball_slobodeckij_pow(w, Ball{sc.centers[i], sc.tau}, s, r); });
        for (double v : part) sums[k] += v;
        out.content.push(1 / sc.tau, sc.count() * std::pow(sc.tau, sigma));
        out.seminorm.push(1 / sc.tau, sums[k]);
    }
    require(out.content.size() >= 4, "hausdorff_obstruction_scan: fewer than 4 usable scales");
    out.content_fit = loglog_fit(out.content);
    out.seminorm_fit = loglog_fit(out.seminorm);
    out.content_bounded_below = out.content_fit.slope >= -cfg.slope_tol;
    out.seminorm_vanishing = out.seminorm_fit.slope < -cfg.critical_margin;

    for (double q : qs) {
        require_domain(q >= 2, "hausdorff_obstruction_scan: q must be >= 2");
        HausdorffEntry e;
        e.q = q;
        e.exponent = r * (d * (0.5 + 1 / r - 1 / q) - s);
        for (std::size_t k = 0; k < out.zeros.scales.size(); ++k) {
            const auto& sc = out.zeros.scales[k];
            if (sc.count() == 0 || sums[k] <= 0) continue;
            const double lo = sc.count() * std::pow(sc.tau, e.exponent);
            e.lower.push(1 / sc.tau, lo);
            e.quotient.push(1 / sc.tau, lo / sums[k]);
        }
        if (e.quotient.size() >= 4) e.fit = loglog_fit(e.quotient);
        const double gap = (e.exponent - sigma) / r;
        if (!out.content_bounded_below) {
            e.reason = "content decays: candidate set thinner than sigma";
        } else if (!out.seminorm_vanishing) {
            e.reason = "seminorm sums do not vanish";
        } else if (std::abs(gap) <= cfg.critical_margin) {
            e.verdict = HausdorffEntry::Verdict::critical;
            e.reason = "e(q) = sigma";
        } else if (gap < 0) {
            e.verdict = HausdorffEntry::Verdict::obstruction;
            e.reason = "e(q) < sigma";
        } else {
            e.reason = "e(q) > sigma";
        }
        out.entries.push_back(std::move(e));
    }

    // Flip between the last binding and the first non-binding q; e(q) is affine in
    // 1/q, so interpolating e(q) - sigma in 1/q locates the crossing.
    std::vector<const HausdorffEntry*> order;
    for (const auto& e : out.entries) order.push_back(&e);
    std::sort(order.begin(), order.end(), [](auto a, auto b) { return a->q < b->q; });
    for (std::size_t i = 0; i + 1 < order.size(); ++i) {
        if (!order[i]->binds() || order[i + 1]->binds()) continue;
        const double a = order[i]->exponent - sigma, b = order[i + 1]->exponent - sigma;
        const double ia = 1 / order[i]->q, ib = 1 / order[i + 1]->q;
        const double t = a / (a - b);
        out.q_flip = 1 / (ia + t * (ib - ia));
        out.has_flip = true;
        break;
    }
    return out;
}

}  // namespace fmlab
