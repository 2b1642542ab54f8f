#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "fmlab/fit.hpp"
#include "fmlab/matrix_multiplier.hpp"
#include "fmlab/parallel.hpp"

namespace fmlab {

// A window on the real line with its decay certificate: |g| < tail_tol
// outside [-T, T].  `ghat` is optional and only used by localization scans.
struct GaborWindow {
    std::function<cplx(double)> g;
    double T = 6;
    double tail_tol = 1e-12;
    std::function<cplx(double)> ghat;
    std::string name;
};

inline GaborWindow gaussian_window(double T = 6) {
    auto f = [](double x) { return cplx(std::exp(-pi * x * x)); };
    return GaborWindow{f, T, 1e-12, f, "gaussian"};
}

inline GaborWindow box_window() {
    auto f = [](double x) { return cplx(x >= 0 && x < 1 ? 1.0 : 0.0); };
    auto fh = [](double xi) {
        if (xi == 0) return cplx(1.0);
        return (1.0 - std::polar(1.0, -2 * pi * xi)) / cplx(0.0, 2 * pi * xi);
    };
    return GaborWindow{f, 1, 1e-12, fh, "box"};
}

struct CertificateReport {
    bool ok = false;
    double max_tail = 0;
};

// Probes |g| on [T, T + 16] and its mirror at spacing 1/64.
inline CertificateReport check_certificate(const GaborWindow& w) {
    CertificateReport r;
    for (int i = 0; i <= 16 * 64; ++i) {
        const double x = w.T + i / 64.0;
        r.max_tail = std::max({r.max_tail, std::abs(w.g(x)), std::abs(w.g(-x))});
    }
    r.ok = r.max_tail < w.tail_tol;
    return r;
}

// Samples at the cell centers x_i = (i + 1/2)/M, y_j = (j + 1/2)/M, with one
// extra period in each variable kept for the quasi-periodicity residual.
class ZakField {
public:
    ZakField(int M, std::vector<cplx> v) : M_(M), v_(std::move(v)) {}

    int M() const { return M_; }
    double x(int i) const { return (i + 0.5) / M_; }
    double y(int j) const { return (j + 0.5) / M_; }
    // 0 <= i, j < 2M; i >= M is the translate by one in x, likewise j.
    cplx at(int i, int j) const { return v_[std::size_t(i) * 2 * M_ + j]; }
    cplx operator()(int i, int j) const { return at(i, j); }

private:
    int M_;
    std::vector<cplx> v_;
};

inline int zak_terms(double T) { return int(std::ceil(T)) + 1; }

inline cplx zak_value(const GaborWindow& w, double x, double y) {
    const int K = zak_terms(w.T);
    cplx s = 0;
    for (int k = -K; k <= K; ++k) s += w.g(x - k) * std::polar(1.0, 2 * pi * k * y);
    return s;
}

// Zg(x, y) = sum_{|k| <= ceil(T) + 1} g(x - k) e^{2 pi i k y}, with no tail check.
inline ZakField zak_transform_unchecked(const GaborWindow& w, int M, int workers = 1) {
    require(M >= 4, "zak_transform: M must be >= 4");
    const int K = zak_terms(w.T);
    const int S = 2 * M;
    std::vector<cplx> v(std::size_t(S) * S);
    parallel_for(std::size_t(S), workers, [&](std::size_t i) {
        const double x = (double(i) + 0.5) / M;
        std::vector<cplx> gk(2 * K + 1);
        for (int k = -K; k <= K; ++k) gk[k + K] = w.g(x - k);
        for (int j = 0; j < S; ++j) {
            const double y = (j + 0.5) / M;
            cplx s = 0;
            for (int k = -K; k <= K; ++k) s += gk[k + K] * std::polar(1.0, 2 * pi * k * y);
            v[i * S + j] = s;
        }
    });
    return ZakField(M, std::move(v));
}

inline ZakField zak_transform(const GaborWindow& w, int M, int workers = 1) {
    auto cert = check_certificate(w);
    require(cert.ok, "zak_transform: tail tolerance unmet beyond T = " + std::to_string(w.T) + " (max tail " +
                         std::to_string(cert.max_tail) + "); increase T");
    return zak_transform_unchecked(w, M, workers);
}

// max |Zg(x+1, y) - e^{2 pi i y} Zg(x, y)| and |Zg(x, y+1) - Zg(x, y)|.
inline double quasi_periodicity_residual(const ZakField& Z) {
    const int M = Z.M();
    double r = 0;
    for (int i = 0; i < M; ++i)
        for (int j = 0; j < M; ++j) {
            const cplx z = Z(i, j);
            r = std::max(r, std::abs(Z(i + M, j) - std::polar(1.0, 2 * pi * Z.y(j)) * z));
            r = std::max(r, std::abs(Z(i, j + M) - z));
        }
    return r;
}

// max ||Zg(x+1, y)| - |Zg(x, y)||.
inline double modulus_periodicity_residual(const ZakField& Z) {
    double r = 0;
    for (int i = 0; i < Z.M(); ++i)
        for (int j = 0; j < Z.M(); ++j) r = std::max(r, std::abs(std::abs(Z(i + Z.M(), j)) - std::abs(Z(i, j))));
    return r;
}

inline double zak_l2_norm(const ZakField& Z) {
    double s = 0;
    for (int i = 0; i < Z.M(); ++i)
        for (int j = 0; j < Z.M(); ++j) s += std::norm(Z(i, j));
    return std::sqrt(s) / Z.M();
}

// ||g||_{L^2} by Gauss-Kronrod on unit panels of [-T, T].
inline double window_l2_norm(const GaborWindow& w) {
    using boost::math::quadrature::gauss_kronrod;
    const int K = int(std::ceil(w.T));
    double s = 0;
    for (int k = -K; k < K; ++k)
        s += gauss_kronrod<double, 31>::integrate([&](double x) { return std::norm(w.g(x)); }, double(k),
                                                  double(k + 1), 10, 1e-14);
    return std::sqrt(s);
}

struct UnitarityReport {
    double zak_norm = 0;
    double window_norm = 0;
    double defect = 0;
};

inline UnitarityReport unitarity(const ZakField& Z, const GaborWindow& w) {
    UnitarityReport r;
    r.zak_norm = zak_l2_norm(Z);
    r.window_norm = window_l2_norm(w);
    r.defect = std::abs(r.zak_norm - r.window_norm);
    return r;
}

struct ZakCell {
    int i = 0, j = 0;
    double x = 0, y = 0;
    double modulus = 0;
};

inline ZakCell min_modulus(const ZakField& Z) {
    ZakCell c;
    c.modulus = std::numeric_limits<double>::infinity();
    for (int i = 0; i < Z.M(); ++i)
        for (int j = 0; j < Z.M(); ++j) {
            const double a = std::abs(Z(i, j));
            if (a < c.modulus) c = {i, j, Z.x(i), Z.y(j), a};
        }
    return c;
}

// Largest modulus jump between neighbouring samples.
inline double modulus_of_continuity(const ZakField& Z) {
    double m = 0;
    for (int i = 0; i < Z.M(); ++i)
        for (int j = 0; j < Z.M(); ++j) {
            const double a = std::abs(Z(i, j));
            m = std::max({m, std::abs(std::abs(Z(i + 1, j)) - a), std::abs(std::abs(Z(i, j + 1)) - a)});
        }
    return m;
}

// Cells with |Zg| below 10 times the modulus of continuity.
inline std::vector<ZakCell> zero_candidates(const ZakField& Z) {
    const double thr = 10 * modulus_of_continuity(Z);
    std::vector<ZakCell> out;
    for (int i = 0; i < Z.M(); ++i)
        for (int j = 0; j < Z.M(); ++j) {
            const double a = std::abs(Z(i, j));
            if (a < thr) out.push_back({i, j, Z.x(i), Z.y(j), a});
        }
    return out;
}

// |Zg|^2 sampled at the torus points of an n x n grid (|Zg| is 1-periodic).
inline SampleField zak_weight(const GaborWindow& w, int n, int workers = 1) {
    auto cert = check_certificate(w);
    require(cert.ok, "zak_weight: tail tolerance unmet; increase T");
    TorusGrid g(2, n);
    SampleField f(g);
    parallel_for(g.size(), workers, [&](std::size_t i) {
        auto p = g.point(i);
        f.values[i] = std::norm(zak_value(w, p[0], p[1]));
    });
    return f;
}

inline int weight_grid_size(int N) {
    int n = 64;
    while (n < 8 * N + 4) n *= 2;
    return n;
}

// Best D in D ||f^||_q <= ||f||_{L^2_w}, w = |Zg|^2, over trigonometric
// polynomials on `box`.
inline WeightedConstant gabor_cq_lower_bound(const GaborWindow& g, double q, const FreqBox& box,
                                             const WeightedOptions& opt = {}) {
    require(box.d == 2, "gabor_cq_lower_bound: the Zak weight lives on T^2");
    auto wf = zak_weight(g, weight_grid_size(box.N), opt.workers);
    double wmax = 0;
    for (const auto& z : wf.values) wmax = std::max(wmax, z.real());
    require(wmax > 1e-20, "gabor_cq_lower_bound: degenerate weight (|Zg| < 1e-10 everywhere)");
    return weighted_lower_constant(scalar_field(wf), q, box, opt);
}

struct CqScan {
    double q = 2;
    ScanSeries series;  // (N, D)
    ExponentFit fit;
    Trend trend = Trend::inconclusive;
    std::vector<WeightedConstant> points;
};

inline CqScan gabor_cq_scan(const GaborWindow& g, double q, const std::vector<int>& Ns, const WeightedOptions& opt = {}) {
    CqScan s;
    s.q = q;
    s.series.label = "gabor_D";
    for (int N : Ns) {
        auto D = gabor_cq_lower_bound(g, q, FreqBox(2, N), opt);
        s.series.push(N, D.value());
        s.points.push_back(D);
    }
    s.fit = loglog_fit(s.series);
    s.trend = classify_trend(s.fit);
    return s;
}

// |f|^2 on Gauss-Legendre nodes covering [0, R_max] (or [-R_max, R_max]
// folded onto [0, R_max] for non-even f), reusable across exponents t.
struct RadialTable {
    std::vector<double> x, w, f2;
};

inline RadialTable tabulate_radial(const std::function<cplx(double)>& f, double Rmax, bool even,
                                   int nodes_per_unit = 8, int workers = 1) {
    static const double gl8x[8] = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
                                   0.1834346424956498,  0.5255324099163290,  0.7966664774136267,  0.9602898564975363};
    static const double gl8w[8] = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
                                   0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
    require(nodes_per_unit == 8, "tabulate_radial: 8 nodes per unit panel supported");
    const int panels = int(std::ceil(Rmax));
    RadialTable t;
    for (int p = 0; p < panels; ++p)
        for (int i = 0; i < 8; ++i) {
            t.x.push_back(p + 0.5 + 0.5 * gl8x[i]);
            t.w.push_back(0.5 * gl8w[i]);
        }
    t.f2 = parallel_map<double>(t.x.size(), workers, [&](std::size_t i) {
        const double a = std::norm(f(t.x[i]));
        return even ? 2 * a : a + std::norm(f(-t.x[i]));
    });
    return t;
}

// Cumulative int_{|x| <= R} |x|^t |f|^2 for ascending integer R.
inline ScanSeries localization_scan(const RadialTable& tab, double t, const std::vector<double>& Rs) {
    require_domain(t >= 0, "localization_scan: t must be >= 0");
    ScanSeries s("localization");
    std::size_t idx = 0;
    double acc = 0;
    for (double R : Rs) {
        while (idx < tab.x.size() && tab.x[idx] <= R) {
            acc += tab.w[idx] * std::pow(tab.x[idx], t) * tab.f2[idx];
            ++idx;
        }
        s.push(R, acc);
    }
    return s;
}

inline double localization_integral(const std::function<cplx(double)>& f, double t, double R, bool even = false) {
    require_domain(t >= 0 && R > 0, "localization_integral: need t >= 0 and R > 0");
    auto tab = tabulate_radial(f, std::ceil(R), even);
    auto s = localization_scan(tab, t, {R});
    return s.value.empty() ? 0.0 : s.value[0];
}

struct LocalizationVerdict {
    double t = 0;
    DivergenceReport report;
    bool finite() const { return report.verdict == Divergence::convergent; }
    bool infinite() const { return report.verdict == Divergence::divergent; }
};

struct BltPair {
    double r = 0, t = 0;
    bool both_finite = false;
    bool forbidden = false;  // 1/r + 1/t <= q'/2
};

struct BltReport {
    double q = 2;
    std::vector<LocalizationVerdict> time, freq;
    std::vector<BltPair> pairs;
    // Pairs finite on both sides inside the region excluded for exact
    // (C_q) Gabor systems.
    int forbidden_finite = 0;
};

inline std::vector<double> dyadic_radii(int j0, int j1) {
    std::vector<double> r;
    for (int j = j0; j <= j1; ++j) r.push_back(std::ldexp(1.0, j));
    return r;
}

inline BltReport blt_scan(const GaborWindow& g, double q, const std::vector<double>& time_exps,
                          const std::vector<double>& freq_exps, const std::vector<double>& Rs, int workers = 1) {
    require(bool(g.ghat), "blt_scan: window needs a Fourier transform handle");
    require(Rs.size() >= 4, "blt_scan: need at least 4 radii");
    BltReport rep;
    rep.q = q;
    const double Rmax = Rs.back();
    auto tt = tabulate_radial(g.g, Rmax, false, 8, workers);
    auto tf = tabulate_radial(g.ghat, Rmax, false, 8, workers);
    for (double r : time_exps) rep.time.push_back({r, classify_divergence(localization_scan(tt, r, Rs))});
    for (double t : freq_exps) rep.freq.push_back({t, classify_divergence(localization_scan(tf, t, Rs))});
    const double qc = conjugate_exponent(q);
    for (const auto& a : rep.time)
        for (const auto& b : rep.freq) {
            BltPair p{a.t, b.t, a.finite() && b.finite(), false};
            const double s = (a.t > 0 ? 1 / a.t : std::numeric_limits<double>::infinity()) +
                             (b.t > 0 ? 1 / b.t : std::numeric_limits<double>::infinity());
            p.forbidden = s <= qc / 2;
            if (p.both_finite && p.forbidden) ++rep.forbidden_finite;
            rep.pairs.push_back(p);
        }
    return rep;
}

}  // namespace fmlab
