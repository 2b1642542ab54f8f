#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Eigenvalues>

#include "fmlab/fit.hpp"
#include "fmlab/matrix_multiplier.hpp"
#include "fmlab/sobolev.hpp"

namespace fmlab {

// Fourier transforms of the K generators, with |h^_k| < tail_tol beyond Kmax.
struct GeneratorSet {
    int d = 1;
    std::vector<std::function<cplx(const Point&)>> hat;
    int Kmax = 4;
    double tail_tol = 1e-12;

    int K() const { return int(hat.size()); }
};

struct TailReport {
    bool ok = false;
    double max_tail = 0;
};

// Probes the shell Kmax + 1/2 <= |x|_inf <= Kmax + 4 at spacing 1/16.
inline TailReport check_tail(const GeneratorSet& H) {
    TailReport r;
    const double a = H.Kmax + 0.5, b = H.Kmax + 4.0;
    auto probe = [&](const Point& x) {
        for (const auto& h : H.hat) r.max_tail = std::max(r.max_tail, std::abs(h(x)));
    };
    for (double t = a; t <= b; t += 1.0 / 16) {
        if (H.d == 1) {
            probe({t, 0.0});
            probe({-t, 0.0});
        } else {
            for (double u = -b; u <= b; u += 1.0 / 16) {
                probe({t, u});
                probe({-t, u});
                probe({u, t});
                probe({u, -t});
            }
        }
    }
    r.ok = r.max_tail < H.tail_tol;
    return r;
}

// Extra-invariance lattice Z^d < Gamma: (1/m)Z in d = 1, (1/m1)Z x (1/m2)Z or
// the quincunx lattice Z^2 + (1/2,1/2)Z in d = 2.  Frequencies l in Z^d are
// grouped by their class in Z^d / Gamma*.
struct LatticeSpec {
    enum class Kind { line, diagonal, quincunx };
    Kind kind = Kind::line;
    int m1 = 2, m2 = 1;

    static LatticeSpec line(int m) {
        require(m >= 2, "LatticeSpec: m must be >= 2");
        return {Kind::line, m, 1};
    }
    static LatticeSpec diagonal(int a, int b) {
        require(a >= 1 && b >= 1 && a * b >= 2, "LatticeSpec: index must be >= 2");
        return {Kind::diagonal, a, b};
    }
    static LatticeSpec quincunx() { return {Kind::quincunx, 2, 1}; }

    int d() const { return kind == Kind::line ? 1 : 2; }
    int index() const {
        switch (kind) {
            case Kind::line: return m1;
            case Kind::diagonal: return m1 * m2;
            default: return 2;
        }
    }
    int class_of(int l1, int l2) const {
        switch (kind) {
            case Kind::line: return detail::mod(l1, m1);
            case Kind::diagonal: return detail::mod(l1, m1) * m2 + detail::mod(l2, m2);
            default: return detail::mod(l1 + l2, 2);
        }
    }
    std::string describe() const {
        switch (kind) {
            case Kind::line: return "(1/" + std::to_string(m1) + ")Z";
            case Kind::diagonal: return "(1/" + std::to_string(m1) + ")Z x (1/" + std::to_string(m2) + ")Z";
            default: return "quincunx";
        }
    }
};

// Generator values H^(x + l) for every grid sample x and |l|_inf <= Kmax + 1.
struct GeneratorSamples {
    TorusGrid grid;
    int L = 0;
    std::vector<std::array<int, 2>> shifts;
    std::vector<Eigen::VectorXcd> values;  // [sample * shifts + s]

    const Eigen::VectorXcd& at(std::size_t sample, std::size_t s) const { return values[sample * shifts.size() + s]; }
};

inline GeneratorSamples sample_generators(const GeneratorSet& H, const TorusGrid& g, int workers = 1) {
    require(H.K() >= 1, "sample_generators: empty generator set");
    require(g.d() == H.d, "sample_generators: grid dimension differs from the generators");
    auto tail = check_tail(H);
    require(tail.ok, "gramian: tail tolerance unmet beyond Kmax; increase Kmax");
    GeneratorSamples s;
    s.grid = g;
    s.L = H.Kmax + 1;
    for (int a = -s.L; a <= s.L; ++a) {
        if (H.d == 1)
            s.shifts.push_back({a, 0});
        else
            for (int b = -s.L; b <= s.L; ++b) s.shifts.push_back({a, b});
    }
    const std::size_t S = s.shifts.size();
    s.values.resize(g.size() * S);
    parallel_for(g.size(), workers, [&](std::size_t i) {
        const Point x = g.point(i);
        for (std::size_t k = 0; k < S; ++k) {
            Eigen::VectorXcd v(H.K());
            const Point y{x[0] + s.shifts[k][0], x[1] + s.shifts[k][1]};
            for (int j = 0; j < H.K(); ++j) v[j] = H.hat[std::size_t(j)](y);
            s.values[i * S + k] = v;
        }
    });
    return s;
}

// P(H^)(x) = sum_l H^(x + l) H^(x + l)*.
inline HermitianField gramian(const GeneratorSamples& s) {
    const int K = int(s.values.front().size());
    std::vector<Mat> m(s.grid.size(), Mat::Zero(K, K));
    for (std::size_t i = 0; i < s.grid.size(); ++i)
        for (std::size_t k = 0; k < s.shifts.size(); ++k) {
            const auto& v = s.at(i, k);
            m[i] += v * v.adjoint();
        }
    return HermitianField(K, s.grid, std::move(m), 1e-9);
}

inline HermitianField gramian(const GeneratorSet& H, const TorusGrid& g, int workers = 1) {
    return gramian(sample_generators(H, g, workers));
}

// parts[i][r] = P_{Gamma*}(H^)(x_i + r) for the class representative r.
struct SubGramians {
    LatticeSpec lattice;
    std::vector<std::vector<Mat>> parts;
};

inline SubGramians sub_gramian(const GeneratorSamples& s, const LatticeSpec& G) {
    require(G.d() == s.grid.d(), "sub_gramian: lattice dimension differs from the grid");
    const int K = int(s.values.front().size());
    SubGramians out;
    out.lattice = G;
    out.parts.assign(s.grid.size(), std::vector<Mat>(std::size_t(G.index()), Mat::Zero(K, K)));
    for (std::size_t i = 0; i < s.grid.size(); ++i)
        for (std::size_t k = 0; k < s.shifts.size(); ++k) {
            const auto& v = s.at(i, k);
            out.parts[i][std::size_t(G.class_of(s.shifts[k][0], s.shifts[k][1]))] += v * v.adjoint();
        }
    return out;
}

// max_x || P(x) - sum_r P_{Gamma*}(x + r) ||.
inline double decomposition_residual(const HermitianField& P, const SubGramians& sub) {
    double r = 0;
    for (std::size_t i = 0; i < P.size(); ++i) {
        Mat acc = Mat::Zero(P.K(), P.K());
        for (const auto& a : sub.parts[i]) acc += a;
        r = std::max(r, (P[i] - acc).cwiseAbs().maxCoeff());
    }
    return r;
}

inline Eigen::VectorXd hermitian_eigenvalues(const Mat& a) {
    Eigen::SelfAdjointEigenSolver<Mat> es(a, Eigen::EigenvaluesOnly);
    return es.eigenvalues();
}

inline int numerical_rank(const Eigen::VectorXd& ev, double ref, double rho) {
    if (!(ref > 1e-300)) return 0;
    int r = 0;
    for (Eigen::Index i = 0; i < ev.size(); ++i) r += ev[i] > rho * ref;
    return r;
}

struct RankSample {
    int rank_P = 0;
    int rank_sum = 0;
    double lambda_max = 0;
};

struct RankReport {
    std::string lattice;
    int index = 2;
    double rho = 1e-8;
    double fraction = 0;                // samples where the rank formula holds
    std::vector<double> sweep_fraction;  // one per rho in the sweep
    bool sweep_agrees = false;
    bool degenerate = false;  // P vanishes identically
    bool invariant = false;
    int J = 0;
    bool nontrivial = false;  // index does not divide J
    std::string verdict;
    std::vector<RankSample> samples;
};

struct GeneratorCount {
    int J = 0;
    bool guard_applied = false;
};

// J = max numerical rank.  An isolated maximal rank held by under 0.1% of the
// samples (no neighbour shares it) is discarded as a measure-zero artifact.
inline GeneratorCount minimal_generator_count(const HermitianField& P, double rho = 1e-8) {
    std::vector<int> ranks(P.size());
    for (std::size_t i = 0; i < P.size(); ++i) {
        auto ev = hermitian_eigenvalues(P[i]);
        ranks[i] = numerical_rank(ev, ev.size() ? ev[ev.size() - 1] : 0.0, rho);
    }
    GeneratorCount gc;
    gc.J = ranks.empty() ? 0 : *std::max_element(ranks.begin(), ranks.end());
    const auto& g = P.grid();
    std::size_t hits = 0;
    bool isolated = true;
    for (std::size_t i = 0; i < ranks.size(); ++i) {
        if (ranks[i] != gc.J) continue;
        ++hits;
        auto m = g.multi(i);
        const int n = g.n();
        std::vector<std::size_t> nb;
        nb.push_back(g.index(detail::mod(m[0] + 1, n), m[1]));
        nb.push_back(g.index(detail::mod(m[0] - 1, n), m[1]));
        if (g.d() == 2) {
            nb.push_back(g.index(m[0], detail::mod(m[1] + 1, n)));
            nb.push_back(g.index(m[0], detail::mod(m[1] - 1, n)));
        }
        for (auto j : nb)
            if (ranks[j] == gc.J) isolated = false;
    }
    if (gc.J > 0 && isolated && double(hits) < 1e-3 * double(ranks.size())) {
        int next = 0;
        for (int r : ranks)
            if (r < gc.J) next = std::max(next, r);
        gc.J = next;
        gc.guard_applied = true;
    }
    return gc;
}

namespace detail {

inline std::vector<RankSample> rank_samples(const HermitianField& P, const SubGramians& sub, double rho) {
    std::vector<RankSample> out(P.size());
    for (std::size_t i = 0; i < P.size(); ++i) {
        auto ev = hermitian_eigenvalues(P[i]);
        const double ref = ev.size() ? ev[ev.size() - 1] : 0.0;
        out[i].lambda_max = ref;
        out[i].rank_P = numerical_rank(ev, ref, rho);
        for (const auto& a : sub.parts[i]) out[i].rank_sum += numerical_rank(hermitian_eigenvalues(a), ref, rho);
    }
    return out;
}

inline double holding_fraction(const std::vector<RankSample>& s) {
    std::size_t ok = 0;
    for (const auto& r : s) ok += r.rank_P == r.rank_sum;
    return s.empty() ? 0.0 : double(ok) / double(s.size());
}

}  // namespace detail

// rank P(x) = sum_r rank P_{Gamma*}(x + r) on more than 99.9% of the samples,
// required to agree across the rho sweep.
inline RankReport rank_formula_check(const HermitianField& P, const SubGramians& sub, double rho = 1e-8,
                                     const std::vector<double>& sweep = {1e-6, 1e-8, 1e-10}) {
    RankReport rep;
    rep.lattice = sub.lattice.describe();
    rep.index = sub.lattice.index();
    rep.rho = rho;
    rep.samples = detail::rank_samples(P, sub, rho);
    rep.fraction = detail::holding_fraction(rep.samples);
    double pmax = 0;
    for (const auto& s : rep.samples) pmax = std::max(pmax, s.lambda_max);
    rep.degenerate = !(pmax > 1e-300);
    std::vector<bool> verdicts;
    for (double r : sweep) {
        const double f = detail::holding_fraction(detail::rank_samples(P, sub, r));
        rep.sweep_fraction.push_back(f);
        verdicts.push_back(f > 0.999);
    }
    rep.sweep_agrees = std::all_of(verdicts.begin(), verdicts.end(), [&](bool v) { return v == verdicts.front(); });
    rep.invariant = rep.fraction > 0.999;
    rep.J = minimal_generator_count(P, rho).J;
    rep.nontrivial = rep.invariant && !rep.degenerate && rep.J % rep.index != 0;
    if (!rep.sweep_agrees)
        rep.verdict = "inconclusive";
    else if (rep.degenerate)
        rep.verdict = "degenerate";
    else
        rep.verdict = rep.invariant ? "Gamma-invariant" : "not Gamma-invariant";
    return rep;
}

struct DominationReport {
    std::size_t qualifying = 0;
    std::size_t skipped = 0;
    std::size_t violations = 0;
    double max_excess = -std::numeric_limits<double>::infinity();  // max of mu - min eta
    bool holds() const { return violations == 0; }
};

// B = sum A_k with rank B = sum rank A_k: the smallest positive eigenvalue
// of B is at most that of every nonzero A_k.
inline bool ev_domination(const Mat& B, const std::vector<Mat>& A, double rho = 1e-8, double slack = 1e-9,
                          double* excess = nullptr) {
    auto eb = hermitian_eigenvalues(B);
    const double ref = eb.size() ? eb[eb.size() - 1] : 0.0;
    auto min_pos = [&](const Eigen::VectorXd& ev) {
        double m = std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < ev.size(); ++i)
            if (ev[i] > rho * ref) m = std::min(m, ev[i]);
        return m;
    };
    const double mu = min_pos(eb);
    double eta = std::numeric_limits<double>::infinity();
    for (const auto& a : A) eta = std::min(eta, min_pos(hermitian_eigenvalues(a)));
    if (excess) *excess = mu - eta;
    return mu <= eta + slack;
}

inline DominationReport ev_domination_check(const HermitianField& P, const SubGramians& sub, double rho = 1e-8,
                                            double slack = 1e-9) {
    DominationReport rep;
    auto samples = detail::rank_samples(P, sub, rho);
    for (std::size_t i = 0; i < P.size(); ++i) {
        if (samples[i].rank_P != samples[i].rank_sum || samples[i].rank_P == 0) {
            ++rep.skipped;
            continue;
        }
        ++rep.qualifying;
        double ex = 0;
        if (!ev_domination(P[i], sub.parts[i], rho, slack, &ex)) ++rep.violations;
        rep.max_excess = std::max(rep.max_excess, ex);
    }
    return rep;
}

struct SqrtEigenReport {
    std::size_t pairs = 0;
    double max_excess = -std::numeric_limits<double>::infinity();  // lhs - rhs of the pointwise bound
    bool bound_holds = false;
    double s = 0.5;
    std::vector<DivergenceReport> membership;  // per eigenvalue track, H^s partial sums
    std::vector<bool> finite;
};

// Pointwise |sqrt zeta_k(x) - sqrt zeta_k(y)| <= (sum_l |H^(x+l) - H^(y+l)|^2)^{1/2}
// on random sample pairs, and H^s membership of sqrt zeta_k by partial sums.
inline SqrtEigenReport sqrt_eigen_regularity_check(const GeneratorSamples& gs, double s, const std::vector<int>& Ns,
                                                   std::size_t pairs = 10000, std::uint64_t seed = default_seed,
                                                   double slack = 1e-9) {
    require_domain(s > 0 && s <= 1, "sqrt_eigen_regularity_check: s must lie in (0, 1]");
    auto P = gramian(gs);
    auto tracks = eig_decompose(P);
    SqrtEigenReport rep;
    rep.s = s;
    const int K = P.K();
    std::vector<SampleField> root(std::size_t(K), SampleField(P.grid()));
    for (int k = 0; k < K; ++k)
        for (std::size_t i = 0; i < P.size(); ++i) root[k].values[i] = std::sqrt(std::max(0.0, tracks.lambda[k][i].real()));
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, P.size() - 1);
    for (std::size_t p = 0; p < pairs; ++p) {
        const std::size_t a = pick(rng), b = pick(rng);
        double rhs = 0;
        for (std::size_t l = 0; l < gs.shifts.size(); ++l) rhs += (gs.at(a, l) - gs.at(b, l)).squaredNorm();
        rhs = std::sqrt(rhs);
        for (int k = 0; k < K; ++k)
            rep.max_excess = std::max(rep.max_excess, std::abs(root[k][a].real() - root[k][b].real()) - rhs);
    }
    rep.pairs = pairs;
    rep.bound_holds = rep.max_excess <= slack;
    const int Nmax = *std::max_element(Ns.begin(), Ns.end());
    for (int k = 0; k < K; ++k) {
        auto c = analyze(root[k], FreqBox(P.grid().d(), Nmax));
        auto r = classify_divergence(hs_partial_sums(c, s, Ns));
        rep.finite.push_back(r.verdict == Divergence::convergent);
        rep.membership.push_back(r);
    }
    return rep;
}

struct SisCqReport {
    double q = 2;
    ScanSeries series;  // (N, D)
    ExponentFit fit;
    Trend trend = Trend::inconclusive;
    std::vector<WeightedConstant> points;
    bool holds() const { return trend == Trend::stable; }
    bool fails() const { return trend == Trend::vanishing; }
};

// Weighted constant of the translate system, W = P(H^), across boxes.
inline SisCqReport sis_cq_diagnostic(const GeneratorSet& H, double q, const std::vector<int>& Ns,
                                     const WeightedOptions& opt = {}) {
    require(!Ns.empty(), "sis_cq_diagnostic: empty box list");
    const int Nmax = *std::max_element(Ns.begin(), Ns.end());
    int n = 64;
    while (n < 8 * Nmax + 4) n *= 2;
    auto P = gramian(H, TorusGrid(H.d, n), opt.workers);
    double pmax = 0;
    for (std::size_t i = 0; i < P.size(); ++i) pmax = std::max(pmax, P[i].cwiseAbs().maxCoeff());
    require(pmax > 1e-20, "sis_cq_diagnostic: degenerate Gramian");
    SisCqReport rep;
    rep.q = q;
    rep.series.label = "sis_D";
    for (int N : Ns) {
        auto D = weighted_lower_constant(P, q, FreqBox(H.d, N), opt);
        rep.series.push(N, D.value());
        rep.points.push_back(D);
    }
    rep.fit = loglog_fit(rep.series);
    rep.trend = classify_trend(rep.fit);
    return rep;
}

}  // namespace fmlab
