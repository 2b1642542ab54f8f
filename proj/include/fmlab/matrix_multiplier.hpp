#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "fmlab/multiplier.hpp"

namespace fmlab {

// K x K Hermitian matrix per grid sample.  Input is symmetrized after the
// Hermitian defect is checked.
class HermitianField {
public:
    HermitianField() = default;
    HermitianField(int K, const TorusGrid& g, std::vector<Mat> entries, double tol = 1e-12)
        : K_(K), grid_(g), m_(std::move(entries)) {
        require(K >= 1 && K <= 8, "HermitianField: K must lie in [1, 8]");
        require(m_.size() == g.size(), "HermitianField: one matrix per sample required");
        for (auto& a : m_) {
            require(a.rows() == K && a.cols() == K, "HermitianField: matrix size differs from K");
            require(a.allFinite(), "HermitianField: non-finite entry");
            const double defect = (a - a.adjoint()).cwiseAbs().maxCoeff();
            require(defect <= tol * std::max(1.0, a.cwiseAbs().maxCoeff()), "HermitianField: matrix is not Hermitian");
            a = 0.5 * (a + a.adjoint()).eval();
        }
    }

    int K() const { return K_; }
    const TorusGrid& grid() const { return grid_; }
    std::size_t size() const { return m_.size(); }
    const Mat& operator[](std::size_t i) const { return m_[i]; }

    SampleField entry(int i, int j) const {
        SampleField f(grid_);
        for (std::size_t s = 0; s < m_.size(); ++s) f.values[s] = m_[s](i, j);
        return f;
    }

private:
    int K_ = 1;
    TorusGrid grid_;
    std::vector<Mat> m_;
};

template <class F>
HermitianField sample_hermitian(const TorusGrid& g, int K, F&& fn) {
    std::vector<Mat> m(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) m[i] = fn(g.point(i));
    return HermitianField(K, g, std::move(m));
}

inline HermitianField scalar_field(const SampleField& w) {
    std::vector<Mat> m(w.size(), Mat(1, 1));
    for (std::size_t i = 0; i < w.size(); ++i) m[i](0, 0) = cplx(w[i].real(), 0.0);
    return HermitianField(1, w.grid, std::move(m), 1e300);
}

// Pointwise U = Q diag(lambda) Q*, lambda descending; the spectral factor
// V of U = V* Lambda V is Q*.  Each column of Q has its first entry above
// 1e-12 in modulus made real positive.
struct EigenTracks {
    int K = 1;
    TorusGrid grid;
    std::vector<SampleField> lambda;  // lambda[k] real-valued
    std::vector<Mat> vectors;         // Q per sample, columns are eigenvectors

    Mat reconstruct(std::size_t i) const {
        Eigen::VectorXd l(K);
        for (int k = 0; k < K; ++k) l[k] = lambda[k][i].real();
        return vectors[i] * l.asDiagonal() * vectors[i].adjoint();
    }
};

inline EigenTracks eig_decompose(const HermitianField& U, int workers = 1) {
    EigenTracks t;
    t.K = U.K();
    t.grid = U.grid();
    t.lambda.assign(t.K, SampleField(U.grid()));
    t.vectors.resize(U.size());
    parallel_for(U.size(), workers, [&](std::size_t i) {
        Eigen::SelfAdjointEigenSolver<Mat> es(U[i]);
        require(es.info() == Eigen::Success, "eig_decompose: eigensolver failed");
        Mat Q(t.K, t.K);
        for (int k = 0; k < t.K; ++k) {
            const int src = t.K - 1 - k;  // ascending -> descending
            t.lambda[k].values[i] = es.eigenvalues()[src];
            Eigen::VectorXcd v = es.eigenvectors().col(src);
            for (int c = 0; c < t.K; ++c)
                if (std::abs(v[c]) > 1e-12) {
                    v *= std::conj(v[c]) / std::abs(v[c]);
                    break;
                }
            Q.col(k) = v;
        }
        t.vectors[i] = Q;
    });
    return t;
}

// (T_U A)_i(k) = sum_j sum_m U^_ij(k - m) A_j(m); vectors are stacked
// component-major, so the [l^q]^K norm is the plain l^q norm of the stack.
class BlockOperator {
public:
    BlockOperator(const HermitianField& U, const FreqBox& in, const FreqBox& out) : K_(U.K()), in_(in), out_(out) {
        require(in.d == U.grid().d() && out.d == U.grid().d(), "BlockOperator: box dimensions differ");
        const FreqBox sym(in.d, in.N + out.N);
        require(sym.side() <= U.grid().n(), "BlockOperator: symbol grid too coarse for the boxes");
        const Eigen::Index R = Eigen::Index(out.size()), C = Eigen::Index(in.size());
        dense_ = Mat::Zero(K_ * R, K_ * C);
        for (int i = 0; i < K_; ++i)
            for (int j = 0; j < K_; ++j) {
                auto c = analyze(U.entry(i, j), sym);
                for (Eigen::Index r = 0; r < R; ++r) {
                    auto k = out.freq(std::size_t(r));
                    for (Eigen::Index s = 0; s < C; ++s) {
                        auto m = in.freq(std::size_t(s));
                        dense_(i * R + r, j * C + s) = c(k[0] - m[0], k[1] - m[1]);
                    }
                }
            }
    }

    int K() const { return K_; }
    std::size_t rows() const { return std::size_t(dense_.rows()); }
    std::size_t cols() const { return std::size_t(dense_.cols()); }
    const FreqBox& in_box() const { return in_; }
    const Mat& dense() const { return dense_; }
    Vec apply(const Vec& a) const { return dense_ * a; }
    Vec adjoint(const Vec& y) const { return dense_.adjoint() * y; }

private:
    int K_;
    FreqBox in_, out_;
    Mat dense_;
};

// chi_{I_tau} witnesses along the unit directions and along the eigenvectors
// of U at the origin and at the sample of largest spectral norm.
inline std::vector<Vec> block_structured_family(const HermitianField& U, const BlockOperator& op) {
    const FreqBox& box = op.in_box();
    const int K = U.K();
    std::size_t imax = 0;
    double best = -1;
    for (std::size_t i = 0; i < U.size(); ++i) {
        const double v = U[i].cwiseAbs().sum();
        if (v > best) {
            best = v;
            imax = i;
        }
    }
    std::vector<std::pair<Point, Eigen::VectorXcd>> dirs;
    for (std::size_t at : {U.grid().nearest({0.0, 0.0}), imax}) {
        Eigen::SelfAdjointEigenSolver<Mat> es(U[at]);
        for (int k = 0; k < K; ++k) dirs.push_back({U.grid().point(at), es.eigenvectors().col(k)});
    }
    for (int k = 0; k < K; ++k) dirs.push_back({Point{0.0, 0.0}, Eigen::VectorXcd::Unit(K, k)});
    std::vector<Vec> out;
    const Eigen::Index B = Eigen::Index(box.size());
    for (const auto& [c, v] : dirs)
        for (double tau = 0.25; tau * 2 * std::max(box.N, 1) >= 0.5; tau /= 2) {
            Vec chi = to_vec(chi_box_coeffs(tau, box, c));
            Vec a(K * B);
            for (int j = 0; j < K; ++j) a.segment(j * B, B) = v[j] * chi;
            out.push_back(a);
        }
    Eigen::Index bc = 0;
    double bv = -1;
    for (Eigen::Index c = 0; c < op.dense().cols(); ++c) {
        const double v = op.dense().col(c).norm();
        if (v > bv) {
            bv = v;
            bc = c;
        }
    }
    out.push_back(Vec::Unit(op.dense().cols(), bc));
    return out;
}

inline MixedNormEstimate matrix_norm_2_q(const HermitianField& U, double q, const FreqBox& in, const FreqBox& out,
                                         const AscentOptions& opt = {}) {
    require_domain(q > 2, "matrix_norm_2_q: q must exceed 2");
    BlockOperator op(U, in, out);
    return detail::estimate(op, 2.0, q, block_structured_family(U, op), opt);
}

inline MixedNormEstimate matrix_norm_2_q(const HermitianField& U, double q, const FreqBox& box,
                                         const AscentOptions& opt = {}) {
    return matrix_norm_2_q(U, q, box, box, opt);
}

struct EquivalenceReport {
    int K = 1;
    double q = 0;
    double delta = 0.05;
    std::vector<double> lambda_lower, lambda_upper;  // per eigenvalue track
    double matrix_lower = 0, matrix_upper = 0;
    bool scalar_side = false;  // max_k ||T_{lambda_k}|| <= K ||T_U|| (1 + delta)
    bool matrix_side = false;  // ||T_U|| <= sqrt(K) max_k ||T_{lambda_k}|| (1 + delta)
    bool holds() const { return scalar_side && matrix_side; }
};

// Both inequalities are checked on the certified values and on the ascent
// values separately.
inline EquivalenceReport equivalence_check(const HermitianField& U, double q, const FreqBox& box,
                                           const AscentOptions& opt = {}, double delta = 0.05) {
    EquivalenceReport rep;
    rep.K = U.K();
    rep.q = q;
    rep.delta = delta;
    auto tracks = eig_decompose(U, opt.workers);
    for (int k = 0; k < U.K(); ++k) {
        auto est = norm_2_q(build_operator(tracks.lambda[k], box), q, opt);
        rep.lambda_lower.push_back(est.lower);
        rep.lambda_upper.push_back(est.upper);
    }
    auto m = matrix_norm_2_q(U, q, box, opt);
    rep.matrix_lower = m.lower;
    rep.matrix_upper = m.upper;
    const double lmax_lo = *std::max_element(rep.lambda_lower.begin(), rep.lambda_lower.end());
    const double lmax_up = *std::max_element(rep.lambda_upper.begin(), rep.lambda_upper.end());
    const double K = U.K(), f = 1 + delta;
    rep.scalar_side = lmax_lo <= K * rep.matrix_lower * f && lmax_up <= K * rep.matrix_upper * f;
    rep.matrix_side = rep.matrix_lower <= std::sqrt(K) * lmax_lo * f && rep.matrix_upper <= std::sqrt(K) * lmax_up * f;
    return rep;
}

// Best constant D in D ||a||_q <= ||f||_{L^2_W}, f = sum_k a(k) e_k, over a
// vector trigonometric polynomial on `box`.  ||f||_W^2 = a* G a with G the
// block Toeplitz matrix G_(i,k),(j,m) = W^_ij(k - m).
struct WeightedConstant {
    double q = 2;
    double D_structured = 0;  // min over the structured witnesses (an upper bound on D)
    double D_ascent = 0;      // best witness found by ascent (an upper bound on D)
    double D_certified = 0;   // rigorous lower bound on D
    double lambda_min = 0;
    Vec witness;
    int iterations = 0;
    bool converged = false;
    bool exact = false;
    double value() const { return D_ascent; }
};

struct WeightedOptions {
    int restarts = 20;
    double tol = 1e-9;
    int max_iter = 10000;
    std::uint64_t seed = default_seed;
    int workers = 1;
    double eig_tol = 1e-10;
    int eig_max_iter = 5000;
};

namespace detail {

template <class S>
struct WeightedSystem {
    using M = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
    using V = Eigen::Matrix<S, Eigen::Dynamic, 1>;
    M G;
    Eigen::LLT<M> llt;

    double g_norm(const V& a) const { return std::sqrt(std::max(0.0, std::real(a.dot(G * a)))); }
};

template <class S, class V>
double vnorm(const V& a, double q) {
    if constexpr (std::is_same_v<S, double>)
        return vec_norm(a.template cast<cplx>(), q);
    else
        return vec_norm(a, q);
}

template <class S, class V>
V duality(const V& a, double q) {
    if constexpr (std::is_same_v<S, double>)
        return duality_map(a.template cast<cplx>(), q).real();
    else
        return duality_map(a, q);
}

template <class S>
WeightedConstant solve_weighted(const WeightedSystem<S>& sys, double q, const std::vector<Vec>& structured,
                                const WeightedOptions& opt) {
    using V = typename WeightedSystem<S>::V;
    using M = typename WeightedSystem<S>::M;
    const Eigen::Index n = sys.G.rows();
    WeightedConstant res;
    res.q = q;

    // Smallest eigenvalue by inverse iteration.
    {
        std::mt19937_64 rng(opt.seed ^ 0x5A5A5A5AULL);
        std::normal_distribution<double> nd;
        V v(n);
        for (Eigen::Index i = 0; i < n; ++i) v[i] = S(nd(rng));
        v.normalize();
        double mu = 0;
        for (int it = 0; it < opt.eig_max_iter; ++it) {
            V w = sys.llt.solve(v);
            V next = w / w.norm();
            const double lam = std::real(next.dot(sys.G * next));
            const double resid = (sys.G * next - lam * next).norm();
            v = next;
            mu = lam;
            if (resid <= opt.eig_tol * std::max(lam, 1e-300) || resid <= 1e-14 * sys.G.cwiseAbs().maxCoeff()) break;
        }
        res.lambda_min = std::max(mu, 0.0);
    }
    if (q == 2) {
        res.D_ascent = res.D_structured = res.D_certified = std::sqrt(res.lambda_min);
        res.exact = res.converged = true;
    }

    // diag(G^{-1}) = squared column norms of L^{-1}.
    M Linv = sys.llt.matrixL().solve(M::Identity(n, n));
    double dmax = 0;
    std::size_t imax = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double v = Linv.col(i).squaredNorm();
        if (v > dmax) {
            dmax = v;
            imax = std::size_t(i);
        }
    }
    if (std::isinf(q)) {
        res.D_certified = res.D_ascent = res.D_structured = 1.0 / std::sqrt(dmax);
        V e = sys.llt.solve(V::Unit(n, Eigen::Index(imax)));
        res.witness = e.template cast<cplx>();
        res.exact = res.converged = true;
        return res;
    }
    if (q == 2) return res;
    res.D_certified = std::pow(res.lambda_min, 1.0 / q) * std::pow(dmax, -(1 - 2 / q) / 2);

    auto ratio = [&](const V& a) { return sys.g_norm(a) / vnorm<S>(a, q); };
    res.D_structured = std::numeric_limits<double>::infinity();
    std::vector<V> starts;
    for (const Vec& s : structured) {
        V a;
        if constexpr (std::is_same_v<S, double>)
            a = s.real();
        else
            a = s;
        if (vnorm<S>(a, q) == 0) continue;
        const double r = ratio(a);
        if (r < res.D_structured) {
            res.D_structured = r;
            res.witness = a.template cast<cplx>();
        }
        starts.push_back(a);
    }
    // The column of G^{-1} with the largest diagonal entry is the q = infinity extremal.
    starts.push_back(sys.llt.solve(V::Unit(n, Eigen::Index(imax))));
    std::mt19937_64 rng(opt.seed);
    std::normal_distribution<double> nd;
    for (int r = 0; r < opt.restarts; ++r) {
        V a(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            if constexpr (std::is_same_v<S, double>)
                a[i] = nd(rng);
            else
                a[i] = cplx(nd(rng), nd(rng));
        }
        starts.push_back(a);
    }

    struct Run {
        V a;
        double D = std::numeric_limits<double>::infinity();
        int iterations = 0;
        bool converged = false;
    };
    // Maximize ||a||_q on the G-sphere: a <- G^{-1} psi_q(a).
    auto runs = parallel_map<Run>(starts.size(), opt.workers, [&](std::size_t si) {
        Run run;
        V a = starts[si];
        a /= sys.g_norm(a);
        double val = vnorm<S>(a, q);
        run.a = a;
        for (int it = 1; it <= opt.max_iter; ++it) {
            run.iterations = it;
            V next = sys.llt.solve(duality<S>(run.a, q));
            const double gn = sys.g_norm(next);
            if (gn == 0) break;
            next /= gn;
            const double v = vnorm<S>(next, q);
            const double rel = std::abs(v - val) / std::max(val, 1e-300);
            if (v >= val) {
                run.a = next;
                val = v;
            }
            if (rel < opt.tol) {
                run.converged = true;
                break;
            }
        }
        run.D = 1.0 / val;
        return run;
    });
    std::size_t best = 0;
    for (std::size_t i = 1; i < runs.size(); ++i)
        if (runs[i].D < runs[best].D) best = i;
    res.D_ascent = std::min(runs[best].D, res.D_structured);
    if (runs[best].D <= res.D_structured) res.witness = runs[best].a.template cast<cplx>();
    res.iterations = runs[best].iterations;
    res.converged = runs[best].converged;
    return res;
}

}  // namespace detail

// Witnesses: chi_{I_tau} centered at the sample where the smallest eigenvalue
// of W is smallest, along the corresponding eigenvector.
inline std::vector<Vec> weighted_structured_family(const HermitianField& W, const FreqBox& box) {
    const int K = W.K();
    std::size_t imin = 0;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < W.size(); ++i) {
        Eigen::SelfAdjointEigenSolver<Mat> es(W[i], Eigen::EigenvaluesOnly);
        if (es.eigenvalues()[0] < best) {
            best = es.eigenvalues()[0];
            imin = i;
        }
    }
    Eigen::SelfAdjointEigenSolver<Mat> es(W[imin]);
    const Eigen::VectorXcd v = es.eigenvectors().col(0);
    const Point c = W.grid().point(imin);
    const Eigen::Index B = Eigen::Index(box.size());
    std::vector<Vec> out;
    for (double tau = 0.25; tau * 2 * std::max(box.N, 1) >= 0.5; tau /= 2) {
        Vec chi = to_vec(chi_box_coeffs(tau, box, c));
        Vec a(K * B);
        for (int j = 0; j < K; ++j) a.segment(j * B, B) = v[j] * chi;
        out.push_back(a);
    }
    return out;
}

inline WeightedConstant weighted_lower_constant(const HermitianField& W, double q, const FreqBox& box,
                                                const WeightedOptions& opt = {}) {
    require_domain(q >= 2, "weighted_lower_constant: q must be >= 2");
    require(box.d == W.grid().d(), "weighted_lower_constant: box dimension differs from the weight");
    const FreqBox sym(box.d, 2 * box.N);
    require(sym.side() <= W.grid().n(), "weighted_lower_constant: weight grid too coarse for the box (4N+1 > n)");
    const int K = W.K();
    std::vector<CoeffField> what;
    double scale = 0, imag = 0;
    for (int i = 0; i < K; ++i)
        for (int j = 0; j < K; ++j) {
            what.push_back(analyze(W.entry(i, j), sym));
            for (const auto& z : what.back().coeffs) {
                scale = std::max(scale, std::abs(z));
                imag = std::max(imag, std::abs(z.imag()));
            }
        }
    const Eigen::Index B = Eigen::Index(box.size());
    auto fill = [&](auto& G) {
        using S = typename std::decay_t<decltype(G)>::Scalar;
        G.resize(K * B, K * B);
        for (int i = 0; i < K; ++i)
            for (int j = 0; j < K; ++j) {
                const CoeffField& c = what[std::size_t(i * K + j)];
                for (Eigen::Index r = 0; r < B; ++r) {
                    auto k = box.freq(std::size_t(r));
                    for (Eigen::Index s = 0; s < B; ++s) {
                        auto m = box.freq(std::size_t(s));
                        const cplx z = c(k[0] - m[0], k[1] - m[1]);
                        if constexpr (std::is_same_v<S, double>)
                            G(i * B + r, j * B + s) = z.real();
                        else
                            G(i * B + r, j * B + s) = z;
                    }
                }
            }
    };
    auto structured = weighted_structured_family(W, box);
    // A real symmetric G keeps the problem real; for p <= q the real and
    // complex mixed norms of a real matrix coincide.
    if (imag <= 1e-13 * std::max(scale, 1e-300)) {
        detail::WeightedSystem<double> sys;
        fill(sys.G);
        sys.llt.compute(sys.G);
        require(sys.llt.info() == Eigen::Success, "weighted_lower_constant: Gram matrix is not positive definite");
        return detail::solve_weighted(sys, q, structured, opt);
    }
    detail::WeightedSystem<cplx> sys;
    fill(sys.G);
    sys.llt.compute(sys.G);
    require(sys.llt.info() == Eigen::Success, "weighted_lower_constant: Gram matrix is not positive definite");
    return detail::solve_weighted(sys, q, structured, opt);
}

}  // namespace fmlab
