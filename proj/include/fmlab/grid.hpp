#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "fmlab/config.hpp"

namespace fmlab {

using Point = std::array<double, 2>;

// Representative of x in [-1/2, 1/2).
inline double wrap(double x) {
    double r = x - std::floor(x + 0.5);
    if (r >= 0.5) r -= 1.0;
    return r;
}

inline bool is_pow2(long n) { return n > 0 && (n & (n - 1)) == 0; }

class TorusGrid {
public:
    TorusGrid() = default;
    TorusGrid(int d, int n) : d_(d), n_(n) {
        require(d == 1 || d == 2, "TorusGrid: d must be 1 or 2");
        require(n >= 4 && is_pow2(n), "TorusGrid: n must be a power of two >= 4");
    }

    int d() const { return d_; }
    int n() const { return n_; }
    std::size_t size() const { return d_ == 1 ? std::size_t(n_) : std::size_t(n_) * n_; }
    double h() const { return 1.0 / n_; }
    double cell_volume() const { return d_ == 1 ? h() : h() * h(); }
    double coord(int j) const { return -0.5 + double(j) / n_; }
    std::size_t index(int i, int j = 0) const { return d_ == 1 ? std::size_t(i) : std::size_t(i) * n_ + j; }
    std::array<int, 2> multi(std::size_t idx) const {
        if (d_ == 1) return {int(idx), 0};
        return {int(idx / n_), int(idx % n_)};
    }
    Point point(std::size_t idx) const {
        auto m = multi(idx);
        return {coord(m[0]), d_ == 1 ? 0.0 : coord(m[1])};
    }
    // Index of the grid point nearest to p (periodically).
    std::size_t nearest(const Point& p) const {
        auto ax = [&](double x) { return int(std::lround((wrap(x) + 0.5) * n_)) % n_; };
        return d_ == 1 ? std::size_t(ax(p[0])) : index(ax(p[0]), ax(p[1]));
    }
    bool operator==(const TorusGrid& o) const { return d_ == o.d_ && n_ == o.n_; }

private:
    int d_ = 1;
    int n_ = 4;
};

struct FreqBox {
    int d = 1;
    int N = 0;

    FreqBox() = default;
    FreqBox(int d_, int N_) : d(d_), N(N_) {
        require(d == 1 || d == 2, "FreqBox: d must be 1 or 2");
        require(N >= 0, "FreqBox: N must be nonnegative");
    }
    int side() const { return 2 * N + 1; }
    std::size_t size() const { return d == 1 ? std::size_t(side()) : std::size_t(side()) * side(); }
    bool contains(int k1, int k2 = 0) const {
        return std::abs(k1) <= N && (d == 1 ? k2 == 0 : std::abs(k2) <= N);
    }
    std::size_t index(int k1, int k2 = 0) const {
        return d == 1 ? std::size_t(k1 + N) : std::size_t(k1 + N) * side() + (k2 + N);
    }
    std::array<int, 2> freq(std::size_t idx) const {
        if (d == 1) return {int(idx) - N, 0};
        return {int(idx / side()) - N, int(idx % side()) - N};
    }
    bool fits(const TorusGrid& g) const { return g.d() == d && side() <= g.n(); }
    bool operator==(const FreqBox& o) const { return d == o.d && N == o.N; }
};

struct SampleField {
    TorusGrid grid;
    std::vector<cplx> values;

    SampleField() = default;
    explicit SampleField(const TorusGrid& g) : grid(g), values(g.size()) {}
    SampleField(const TorusGrid& g, std::vector<cplx> v) : grid(g), values(std::move(v)) {
        require(values.size() == grid.size(), "SampleField: value count must equal n^d");
        for (const auto& z : values)
            require(std::isfinite(z.real()) && std::isfinite(z.imag()), "SampleField: non-finite sample");
    }
    cplx& operator[](std::size_t i) { return values[i]; }
    const cplx& operator[](std::size_t i) const { return values[i]; }
    std::size_t size() const { return values.size(); }
};

struct CoeffField {
    FreqBox box;
    std::vector<cplx> coeffs;

    CoeffField() = default;
    explicit CoeffField(const FreqBox& b) : box(b), coeffs(b.size()) {}
    CoeffField(const FreqBox& b, std::vector<cplx> c) : box(b), coeffs(std::move(c)) {
        require(coeffs.size() == box.size(), "CoeffField: coefficient count must match the box");
    }
    // Zero outside the box.
    cplx operator()(int k1, int k2 = 0) const {
        return box.contains(k1, k2) ? coeffs[box.index(k1, k2)] : cplx(0.0);
    }
    cplx& at(int k1, int k2 = 0) { return coeffs[box.index(k1, k2)]; }
    std::size_t size() const { return coeffs.size(); }
};

template <class F>
SampleField sample(const TorusGrid& g, F&& f) {
    SampleField out(g);
    for (std::size_t i = 0; i < g.size(); ++i) out.values[i] = cplx(f(g.point(i)));
    return out;
}

namespace detail {

// In-place d-dimensional DFT on an n^d row-major array, unnormalized both ways.
inline void fft_nd(std::vector<cplx>& data, int d, int n, bool inverse) {
    Eigen::FFT<double> fft;
    fft.SetFlag(Eigen::FFT<double>::Unscaled);
    std::vector<cplx> in(n), out(n);
    auto line = [&](std::size_t start, std::size_t stride) {
        for (int i = 0; i < n; ++i) in[i] = data[start + i * stride];
        if (inverse)
            fft.inv(out, in);
        else
            fft.fwd(out, in);
        for (int i = 0; i < n; ++i) data[start + i * stride] = out[i];
    };
    if (d == 1) {
        line(0, 1);
        return;
    }
    for (int r = 0; r < n; ++r) line(std::size_t(r) * n, 1);
    for (int c = 0; c < n; ++c) line(std::size_t(c), std::size_t(n));
}

inline int mod(int k, int n) { return ((k % n) + n) % n; }

}  // namespace detail

// c(k) = n^-d sum_j f(x_j) e^{-2 pi i <k, x_j>}.
inline CoeffField analyze(const SampleField& f, const FreqBox& box) {
    const auto& g = f.grid;
    require(box.d == g.d(), "analyze: box and grid dimension differ");
    require(box.side() <= g.n(), "analyze: box too large for grid (2N+1 > n)");
    std::vector<cplx> data = f.values;
    detail::fft_nd(data, g.d(), g.n(), false);
    const int n = g.n();
    const double scale = 1.0 / double(g.size());
    CoeffField c(box);
    for (std::size_t idx = 0; idx < box.size(); ++idx) {
        auto k = box.freq(idx);
        // x_j = -1/2 + j/n contributes the sign (-1)^k per axis.
        const double sgn = ((k[0] + k[1]) & 1) ? -1.0 : 1.0;
        std::size_t slot = g.d() == 1 ? std::size_t(detail::mod(k[0], n))
                                      : std::size_t(detail::mod(k[0], n)) * n + detail::mod(k[1], n);
        c.coeffs[idx] = sgn * scale * data[slot];
    }
    return c;
}

// f(x_j) = sum_k c(k) e^{2 pi i <k, x_j>}.
inline SampleField synthesize(const CoeffField& c, const TorusGrid& g) {
    const auto& box = c.box;
    require(box.d == g.d(), "synthesize: box and grid dimension differ");
    require(box.side() <= g.n(), "synthesize: box too large for grid (2N+1 > n)");
    const int n = g.n();
    std::vector<cplx> data(g.size(), cplx(0.0));
    for (std::size_t idx = 0; idx < box.size(); ++idx) {
        auto k = box.freq(idx);
        const double sgn = ((k[0] + k[1]) & 1) ? -1.0 : 1.0;
        std::size_t slot = g.d() == 1 ? std::size_t(detail::mod(k[0], n))
                                      : std::size_t(detail::mod(k[0], n)) * n + detail::mod(k[1], n);
        data[slot] += sgn * c.coeffs[idx];
    }
    detail::fft_nd(data, g.d(), n, true);
    return SampleField(g, std::move(data));
}

// Riemann-sum L^p norm on the grid; p = infinity gives the max modulus.
inline double lp_norm(const SampleField& f, double p) {
    require_domain(p >= 1.0, "lp_norm: p must be >= 1");
    if (std::isinf(p)) {
        double m = 0;
        for (const auto& z : f.values) m = std::max(m, std::abs(z));
        return m;
    }
    double s = 0;
    for (const auto& z : f.values) s += std::pow(std::abs(z), p);
    return std::pow(s * f.grid.cell_volume(), 1.0 / p);
}

inline double lq_norm_raw(const std::vector<cplx>& v, double q) {
    require_domain(q >= 1.0, "lq_norm: q must be >= 1");
    if (std::isinf(q)) {
        double m = 0;
        for (const auto& z : v) m = std::max(m, std::abs(z));
        return m;
    }
    if (q == 2.0) {
        double s = 0;
        for (const auto& z : v) s += std::norm(z);
        return std::sqrt(s);
    }
    double m = 0;
    for (const auto& z : v) m = std::max(m, std::abs(z));
    if (m == 0) return 0;
    double s = 0;
    for (const auto& z : v) s += std::pow(std::abs(z) / m, q);
    return m * std::pow(s, 1.0 / q);
}

// Exact finite l^q norm of the coefficients.
inline double lq_norm(const CoeffField& c, double q) { return lq_norm_raw(c.coeffs, q); }

// Pointwise product on a common grid.
inline SampleField multiply(const SampleField& a, const SampleField& b) {
    require(a.grid == b.grid, "multiply: grids differ");
    SampleField out(a.grid);
    for (std::size_t i = 0; i < a.size(); ++i) out.values[i] = a.values[i] * b.values[i];
    return out;
}

inline SampleField abs_field(const SampleField& a) {
    SampleField out(a.grid);
    for (std::size_t i = 0; i < a.size(); ++i) out.values[i] = std::abs(a.values[i]);
    return out;
}

// Re-embed coefficients into a box of another size (zero padding or truncation).
inline CoeffField rebox(const CoeffField& c, const FreqBox& box) {
    require(c.box.d == box.d, "rebox: dimension mismatch");
    CoeffField out(box);
    for (std::size_t idx = 0; idx < box.size(); ++idx) {
        auto k = box.freq(idx);
        out.coeffs[idx] = c(k[0], k[1]);
    }
    return out;
}

}  // namespace fmlab
