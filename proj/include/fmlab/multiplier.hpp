#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fmlab/fit.hpp"
#include "fmlab/grid.hpp"
#include "fmlab/parallel.hpp"

namespace fmlab {

using Vec = Eigen::VectorXcd;
using Mat = Eigen::MatrixXcd;

inline Vec to_vec(const CoeffField& c) { return Eigen::Map<const Vec>(c.coeffs.data(), Eigen::Index(c.size())); }

inline CoeffField to_field(const Vec& v, const FreqBox& box) {
    require(std::size_t(v.size()) == box.size(), "to_field: vector length differs from the box");
    return CoeffField(box, std::vector<cplx>(v.data(), v.data() + v.size()));
}

inline double vec_norm(const Vec& v, double q) {
    if (std::isinf(q)) return v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
    if (q == 2.0) return v.norm();
    const double m = v.size() ? v.cwiseAbs().maxCoeff() : 0.0;
    if (m == 0) return 0;
    double s = 0;
    for (Eigen::Index i = 0; i < v.size(); ++i) s += std::pow(std::abs(v[i]) / m, q);
    return m * std::pow(s, 1.0 / q);
}

inline double conjugate_exponent(double p) {
    if (p == 1.0) return std::numeric_limits<double>::infinity();
    if (std::isinf(p)) return 1.0;
    return p / (p - 1.0);
}

// Truncated multiplier T_u: (T_u a)(k) = sum_m u^(k - m) a(m), k in out_box,
// m in in_box.  A dense matrix is kept when it has at most 2^20 entries;
// larger operators apply by FFT convolution.
class ConvOperator {
public:
    ConvOperator(CoeffField symbol, const FreqBox& in, const FreqBox& out)
        : symbol_(std::move(symbol)), in_(in), out_(out) {
        require(in.d == symbol_.box.d && out.d == symbol_.box.d, "build_operator: box dimensions differ");
        if (rows() * cols() <= (std::size_t(1) << 20)) {
            dense_.resize(Eigen::Index(rows()), Eigen::Index(cols()));
            for (std::size_t r = 0; r < rows(); ++r) {
                auto k = out_.freq(r);
                for (std::size_t c = 0; c < cols(); ++c) {
                    auto m = in_.freq(c);
                    dense_(Eigen::Index(r), Eigen::Index(c)) = symbol_(k[0] - m[0], k[1] - m[1]);
                }
            }
            has_dense_ = true;
        }
    }

    const CoeffField& symbol() const { return symbol_; }
    const FreqBox& in_box() const { return in_; }
    const FreqBox& out_box() const { return out_; }
    std::size_t rows() const { return out_.size(); }
    std::size_t cols() const { return in_.size(); }
    int d() const { return in_.d; }
    bool has_dense() const { return has_dense_; }
    const Mat& dense() const {
        require(has_dense_, "ConvOperator: dense matrix not materialized");
        return dense_;
    }
    cplx entry(std::size_t r, std::size_t c) const {
        auto k = out_.freq(r);
        auto m = in_.freq(c);
        return symbol_(k[0] - m[0], k[1] - m[1]);
    }

    Vec apply(const Vec& a) const {
        require(std::size_t(a.size()) == cols(), "apply: input length differs from in_box");
        if (has_dense_) return dense_ * a;
        return convolve(a, false);
    }
    Vec adjoint(const Vec& y) const {
        require(std::size_t(y.size()) == rows(), "adjoint: input length differs from out_box");
        if (has_dense_) return dense_.adjoint() * y;
        return convolve(y, true);
    }
    CoeffField apply(const CoeffField& a) const {
        require(a.box == in_, "apply: coefficient box differs from in_box");
        return to_field(apply(to_vec(a)), out_);
    }

private:
    // Linear convolution on a zero-padded power-of-two grid, then restriction.
    Vec convolve(const Vec& x, bool adj) const {
        const FreqBox& src = adj ? out_ : in_;
        const FreqBox& dst = adj ? in_ : out_;
        const int Nu = symbol_.box.N;
        int L = 4;
        while (L < 2 * (Nu + src.N + dst.N) + 2) L *= 2;
        const int d = src.d;
        const std::size_t total = d == 1 ? std::size_t(L) : std::size_t(L) * L;
        auto slot = [&](int k1, int k2) {
            return d == 1 ? std::size_t(detail::mod(k1, L)) : std::size_t(detail::mod(k1, L)) * L + detail::mod(k2, L);
        };
        std::vector<cplx> fu(total, 0.0), fx(total, 0.0);
        for (std::size_t i = 0; i < symbol_.size(); ++i) {
            auto j = symbol_.box.freq(i);
            // adjoint kernel: conj(u^(m - k)) = conj(u^(-(k - m)))
            if (adj)
                fu[slot(-j[0], -j[1])] = std::conj(symbol_.coeffs[i]);
            else
                fu[slot(j[0], j[1])] = symbol_.coeffs[i];
        }
        for (std::size_t i = 0; i < src.size(); ++i) {
            auto m = src.freq(i);
            fx[slot(m[0], m[1])] = x[Eigen::Index(i)];
        }
        detail::fft_nd(fu, d, L, false);
        detail::fft_nd(fx, d, L, false);
        for (std::size_t i = 0; i < total; ++i) fu[i] *= fx[i];
        detail::fft_nd(fu, d, L, true);
        const double scale = 1.0 / double(total);
        Vec out(Eigen::Index(dst.size()));
        for (std::size_t i = 0; i < dst.size(); ++i) {
            auto k = dst.freq(i);
            out[Eigen::Index(i)] = fu[slot(k[0], k[1])] * scale;
        }
        return out;
    }

    CoeffField symbol_;
    FreqBox in_, out_;
    Mat dense_;
    bool has_dense_ = false;
};

inline ConvOperator build_operator(const CoeffField& u_hat, const FreqBox& in, const FreqBox& out) {
    require(in.d == u_hat.box.d && out.d == u_hat.box.d, "build_operator: box dimensions differ");
    return ConvOperator(u_hat, in, out);
}

// Samples are analyzed on the box of all differences k - m.
inline ConvOperator build_operator(const SampleField& u, const FreqBox& in, const FreqBox& out) {
    require(in.d == u.grid.d() && out.d == u.grid.d(), "build_operator: box dimensions differ");
    const FreqBox sym(in.d, in.N + out.N);
    require(sym.side() <= u.grid.n(), "build_operator: symbol grid too coarse for the boxes (2(N_in+N_out)+1 > n)");
    return ConvOperator(analyze(u, sym), in, out);
}

inline ConvOperator build_operator(const SampleField& u, const FreqBox& box) { return build_operator(u, box, box); }

// Sample-space route analyze(u * synthesize(a)), exact when n > N_u + N_in + N_out.
inline CoeffField apply_via_samples(const SampleField& u, const CoeffField& a, const FreqBox& out) {
    return analyze(multiply(u, synthesize(a, u.grid)), out);
}

struct SpectralNorm {
    double value = 0;
    bool converged = true;
    int iterations = 0;
    std::string method;
};

struct PowerOptions {
    bool force_power = false;
    double tol = 1e-10;
    int max_iter = 10000;
    std::uint64_t seed = default_seed;
};

// Largest singular value of the truncated operator.
inline SpectralNorm norm_2_2(const ConvOperator& op, const PowerOptions& opt = {}) {
    require(op.in_box() == op.out_box(), "norm_2_2: operator must act on a common box");
    SpectralNorm res;
    if (!opt.force_power && op.has_dense() && op.cols() <= 1024) {
        Eigen::BDCSVD<Mat> svd(op.dense());
        res.value = svd.singularValues()(0);
        res.method = "svd";
        return res;
    }
    res.method = "power";
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> nd;
    Vec v(Eigen::Index(op.cols()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = cplx(nd(rng), nd(rng));
    v.normalize();
    double lam = 0;
    res.converged = false;
    for (int it = 1; it <= opt.max_iter; ++it) {
        Vec w = op.adjoint(op.apply(v));
        lam = v.dot(w).real();
        res.iterations = it;
        const double resid = (w - lam * v).norm();
        if (lam <= 0) break;
        if (resid <= opt.tol * lam) {
            res.converged = true;
            break;
        }
        v = w / w.norm();
    }
    res.value = std::sqrt(std::max(lam, 0.0));
    return res;
}

// Exact ||T||_{2 -> inf}: the largest row norm.
inline double norm_2_inf(const ConvOperator& op) {
    double best = 0;
    for (std::size_t r = 0; r < op.rows(); ++r) {
        double s = 0;
        if (op.has_dense())
            s = op.dense().row(Eigen::Index(r)).squaredNorm();
        else
            for (std::size_t c = 0; c < op.cols(); ++c) s += std::norm(op.entry(r, c));
        best = std::max(best, s);
    }
    return std::sqrt(best);
}

// Fourier coefficients of the indicator of I_tau(center) = center + [-tau, tau]^d.
inline CoeffField chi_box_coeffs(double tau, const FreqBox& box, const Point& center = {0.0, 0.0}) {
    require_domain(tau > 0 && tau < 0.5, "chi_box_coeffs: tau must lie in (0, 1/2)");
    auto factor = [&](int k) { return k == 0 ? 2 * tau : std::sin(2 * pi * tau * k) / (pi * k); };
    CoeffField c(box);
    for (std::size_t i = 0; i < box.size(); ++i) {
        auto k = box.freq(i);
        double v = factor(k[0]);
        double phase = k[0] * center[0];
        if (box.d == 2) {
            v *= factor(k[1]);
            phase += k[1] * center[1];
        }
        c.coeffs[i] = v * std::polar(1.0, -2 * pi * phase);
    }
    return c;
}

struct MixedNormEstimate {
    double p = 2, q = 2;
    double lower = 0;   // certified: attained by `witness`
    double upper = 0;   // best ascent value (heuristic maximum)
    double bound = std::numeric_limits<double>::infinity();  // rigorous upper bound when available
    Vec witness;        // ||witness||_p = 1, ||T witness||_q = lower
    Vec ascent_witness;
    int iterations = 0;
    bool converged = false;
    bool exact = false;
};

struct AscentOptions {
    int restarts = 20;
    double tol = 1e-9;
    int max_iter = 10000;
    std::uint64_t seed = default_seed;
    int workers = 1;
};

namespace detail {

// z |z|^{r-2}, after scaling by the max modulus.
inline Vec duality_map(const Vec& y, double r) {
    const double m = y.size() ? y.cwiseAbs().maxCoeff() : 0.0;
    Vec z = Vec::Zero(y.size());
    if (m == 0) return z;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double a = std::abs(y[i]) / m;
        if (a > 0) z[i] = (y[i] / m) * std::pow(a, r - 2);
    }
    return z;
}

struct AscentRun {
    Vec a;
    double value = 0;
    int iterations = 0;
    bool converged = false;
};

// Boyd's fixed point a <- psi_{p'}(A* psi_q(A a)), normalized in l^p.
template <class Op>
AscentRun ascent(const Op& op, double p, double q, Vec a, const AscentOptions& opt) {
    const double pc = conjugate_exponent(p);
    AscentRun run;
    double na = vec_norm(a, p);
    if (na == 0) return run;
    a /= na;
    run.a = a;
    run.value = vec_norm(op.apply(a), q);
    for (int it = 1; it <= opt.max_iter; ++it) {
        run.iterations = it;
        Vec b = op.adjoint(duality_map(op.apply(run.a), q));
        if (b.norm() == 0) break;
        Vec next = p == 2.0 ? b : duality_map(b, pc);
        next /= vec_norm(next, p);
        const double v = vec_norm(op.apply(next), q);
        const double rel = std::abs(v - run.value) / std::max(run.value, 1e-300);
        if (v >= run.value) {
            run.a = next;
            run.value = v;
        }
        if (rel < opt.tol) {
            run.converged = true;
            break;
        }
    }
    return run;
}

inline Vec random_start(std::mt19937_64& rng, Eigen::Index n) {
    std::normal_distribution<double> nd;
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = cplx(nd(rng), nd(rng));
    return v;
}

// Interpolation bound ||A||_{2->q} <= ||A||_{2->inf}^{1-2/q} ||A||_{2->2}^{2/q}.
inline double interpolation_bound(double n2inf, double n22, double q) {
    if (std::isinf(q)) return n2inf;
    return std::pow(n2inf, 1 - 2 / q) * std::pow(n22, 2 / q);
}

// Shared driver: structured starts feed the certified lower bound, random
// restarts plus the structured starts feed the ascent.
template <class Op>
MixedNormEstimate estimate(const Op& op, double p, double q, const std::vector<Vec>& structured,
                           const AscentOptions& opt) {
    MixedNormEstimate est;
    est.p = p;
    est.q = q;
    for (const Vec& s : structured) {
        const double ns = vec_norm(s, p);
        if (ns == 0) continue;
        Vec a = s / ns;
        const double v = vec_norm(op.apply(a), q);
        if (v > est.lower || est.witness.size() == 0) {
            est.lower = v;
            est.witness = a;
        }
    }
    std::vector<Vec> starts = structured;
    std::mt19937_64 rng(opt.seed);
    for (int r = 0; r < opt.restarts; ++r) starts.push_back(random_start(rng, Eigen::Index(op.cols())));
    auto runs = parallel_map<AscentRun>(starts.size(), opt.workers,
                                        [&](std::size_t i) { return ascent(op, p, q, starts[i], opt); });
    std::size_t best = 0;
    for (std::size_t i = 1; i < runs.size(); ++i)
        if (runs[i].value > runs[best].value) best = i;
    if (!runs.empty()) {
        est.upper = runs[best].value;
        est.ascent_witness = runs[best].a;
        est.iterations = runs[best].iterations;
        est.converged = runs[best].converged;
    }
    est.upper = std::max(est.upper, est.lower);
    return est;
}

inline std::vector<Point> symbol_centers(const CoeffField& u) {
    int n = 64;
    while (n < 4 * u.box.N + 4) n *= 2;
    TorusGrid g(u.box.d, n);
    auto f = synthesize(u, g);
    std::size_t imax = 0, imin = 0;
    for (std::size_t i = 1; i < f.size(); ++i) {
        if (std::abs(f[i]) > std::abs(f[imax])) imax = i;
        if (std::abs(f[i]) < std::abs(f[imin])) imin = i;
    }
    return {Point{0.0, 0.0}, g.point(imax), g.point(imin)};
}

}  // namespace detail

// chi_{I_tau} witnesses at dyadic tau around the origin and the extremes of
// |u|, plus the best column (basis vector).
inline std::vector<Vec> structured_family(const ConvOperator& op, double q) {
    std::vector<Vec> out;
    const FreqBox& box = op.in_box();
    for (const Point& c : detail::symbol_centers(op.symbol()))
        for (double tau = 0.25; tau * 2 * std::max(box.N, 1) >= 0.5; tau /= 2)
            out.push_back(to_vec(chi_box_coeffs(tau, box, c)));
    std::size_t best = 0;
    double bv = -1;
    for (std::size_t c = 0; c < op.cols(); ++c) {
        Vec col(Eigen::Index(op.rows()));
        for (std::size_t r = 0; r < op.rows(); ++r) col[Eigen::Index(r)] = op.entry(r, c);
        const double v = vec_norm(col, q);
        if (v > bv) {
            bv = v;
            best = c;
        }
    }
    out.push_back(Vec::Unit(Eigen::Index(op.cols()), Eigen::Index(best)));
    return out;
}

inline MixedNormEstimate norm_2_q(const ConvOperator& op, double q, const AscentOptions& opt = {}) {
    require_domain(q > 2, "norm_2_q: q must exceed 2 (use norm_2_2 for q = 2)");
    if (std::isinf(q)) {
        MixedNormEstimate est;
        est.q = q;
        est.lower = est.upper = est.bound = norm_2_inf(op);
        est.exact = est.converged = true;
        return est;
    }
    auto est = detail::estimate(op, 2.0, q, structured_family(op, q), opt);
    if (op.in_box() == op.out_box()) est.bound = detail::interpolation_bound(norm_2_inf(op), norm_2_2(op).value, q);
    return est;
}

// ||T||_{p -> q}.  p = 1 and q = infinity are exact (column and row norms);
// otherwise Boyd ascent with l^p-normalized structured witnesses.
inline MixedNormEstimate pq_norm(const ConvOperator& op, double p, double q, const AscentOptions& opt = {}) {
    require_domain(p >= 1 && q >= 1, "pq_norm: exponents must be >= 1");
    require_domain(p <= q, "pq_norm: p must not exceed q");
    MixedNormEstimate est;
    est.p = p;
    est.q = q;
    if (p == 2 && q == 2) {
        auto s = norm_2_2(op);
        est.lower = est.upper = est.bound = s.value;
        est.exact = true;
        est.converged = s.converged;
        return est;
    }
    if (p == 1 || std::isinf(q)) {
        const double pc = conjugate_exponent(p);
        double best = -1;
        Vec w;
        if (p == 1) {
            for (std::size_t c = 0; c < op.cols(); ++c) {
                Vec col(Eigen::Index(op.rows()));
                for (std::size_t r = 0; r < op.rows(); ++r) col[Eigen::Index(r)] = op.entry(r, c);
                const double v = vec_norm(col, q);
                if (v > best) {
                    best = v;
                    w = Vec::Unit(Eigen::Index(op.cols()), Eigen::Index(c));
                }
            }
        } else {
            for (std::size_t r = 0; r < op.rows(); ++r) {
                Vec row(Eigen::Index(op.cols()));
                for (std::size_t c = 0; c < op.cols(); ++c) row[Eigen::Index(c)] = std::conj(op.entry(r, c));
                const double v = vec_norm(row, pc);
                if (v > best) {
                    best = v;
                    w = detail::duality_map(row, pc);
                }
            }
            w /= vec_norm(w, p);
        }
        est.witness = w;
        est.lower = vec_norm(op.apply(w), q);
        est.upper = est.bound = best;
        est.exact = est.converged = true;
        return est;
    }
    std::vector<Vec> structured = structured_family(op, q);
    return detail::estimate(op, p, q, structured, opt);
}

struct ReductionReport {
    double p = 2, q = 2, q_tilde = 2;
    double lhs = 0;  // ||T||_{2 -> q~}
    double rhs = 0;  // ||T||_{p -> q}
    double c = 0;    // lhs / rhs
    bool holds = false;
};

// q~ = (1/2 - 1/p + 1/q)^{-1}.
inline double reduction_exponent(double p, double q) {
    const double inv = 0.5 - 1.0 / p + (std::isinf(q) ? 0.0 : 1.0 / q);
    return inv <= 1e-15 ? std::numeric_limits<double>::infinity() : 1.0 / inv;
}

// On symmetric boxes T^T is T conjugated by k -> -k, so ||T||_{q'->p'} equals
// ||T||_{p->q} and Riesz-Thorin gives the inequality with c = 1.
inline ReductionReport pq_reduction_check(const ConvOperator& op, double p, double q, const AscentOptions& opt = {},
                                          double slack = 1e-3) {
    require_domain(p <= q, "pq_reduction_check: p must not exceed q");
    require_domain((p >= 1 && q <= 2) || (p >= 2), "pq_reduction_check: need 1 <= p <= q <= 2 or 2 <= p <= q");
    ReductionReport rep;
    rep.p = p;
    rep.q = q;
    rep.q_tilde = reduction_exponent(p, q);
    rep.rhs = pq_norm(op, p, q, opt).upper;
    if (std::isinf(rep.q_tilde))
        rep.lhs = norm_2_inf(op);
    else if (rep.q_tilde <= 2 + 1e-12)
        rep.lhs = norm_2_2(op).value;
    else
        rep.lhs = norm_2_q(op, rep.q_tilde, opt).upper;
    rep.c = rep.rhs > 0 ? rep.lhs / rep.rhs : 0;
    rep.holds = rep.lhs <= rep.rhs * (1 + slack);
    return rep;
}

// L^2 mass of w on the cube I_tau(0) (trapezoid weights on the faces).
inline double cube_l2_mass(const SampleField& w, double tau) {
    const auto& g = w.grid;
    const double tol = 0.25 * g.h();
    auto weight = [&](double x) {
        const double a = std::abs(x);
        if (a < tau - tol) return 1.0;
        if (a < tau + tol) return 0.5;
        return 0.0;
    };
    double s = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        auto x = g.point(i);
        double wt = weight(x[0]);
        if (g.d() == 2) wt *= weight(x[1]);
        if (wt > 0) s += wt * std::norm(w[i]);
    }
    return std::sqrt(s * g.cell_volume());
}

struct TauScan {
    double q = 0;
    int d = 1;
    ScanSeries mass;   // (tau, ||w||_{L^2(I_tau)})
    ScanSeries ratio;  // (tau, ||w||_{L^2(I_tau)} / tau^{d(1-1/q)})
    ExponentFit mass_fit;
    ExponentFit ratio_fit;
    double threshold_q = 0;   // d / (d - mass slope)
    std::string verdict;      // obstruction, critical, none
    bool binds() const { return verdict != "none"; }
};

// A ratio vanishing as tau -> 0 (positive slope) rules out a bounded
// multiplier constant at this q.
inline TauScan tau_scan(const SampleField& w, double q, const std::vector<double>& taus, double zero_tol = 1e-8,
                        const FitConfig& cfg = fit_config) {
    require_domain(q >= 1, "tau_scan: q must be >= 1");
    const auto& g = w.grid;
    double wmax = 0;
    for (const auto& z : w.values) wmax = std::max(wmax, std::abs(z));
    require(std::abs(w[g.nearest({0.0, 0.0})]) <= zero_tol * std::max(wmax, 1.0),
            "tau_scan: w does not vanish at the origin");
    TauScan out;
    out.q = q;
    out.d = g.d();
    out.mass.label = "l2_mass";
    out.ratio.label = "tau_ratio";
    std::vector<double> ts = taus;
    std::sort(ts.begin(), ts.end());
    const double e = g.d() * (1 - (std::isinf(q) ? 0.0 : 1.0 / q));
    for (double t : ts) {
        require(t > 0 && t < 0.5, "tau_scan: tau must lie in (0, 1/2)");
        require(t * g.n() >= 2, "tau_scan: tau below grid resolution");
        const double m = cube_l2_mass(w, t);
        out.mass.push(t, m);
        out.ratio.push(t, m / std::pow(t, e));
    }
    out.mass_fit = loglog_fit(out.mass);
    out.ratio_fit = loglog_fit(out.ratio);
    const double ms = out.mass_fit.slope;
    out.threshold_q = ms < g.d() ? g.d() / (g.d() - ms) : std::numeric_limits<double>::infinity();
    const double margin = std::max(cfg.critical_margin, 3 * out.ratio_fit.slope_stderr);
    if (out.ratio_fit.slope > margin)
        out.verdict = "obstruction";
    else if (out.ratio_fit.slope < -margin)
        out.verdict = "none";
    else
        out.verdict = "critical";
    return out;
}

}  // namespace fmlab
