#pragma once

#include <cmath>
#include <random>

#include <boost/random/normal_distribution.hpp>

#include "fmlab/fmlab.hpp"

namespace fmlab::oracle {

inline CoeffField random_coeffs(const FreqBox& box, std::mt19937_64& rng, bool real_field = false) {
    std::normal_distribution<double> nd;
    CoeffField c(box);
    for (auto& z : c.coeffs) z = cplx(nd(rng), nd(rng));
    if (real_field) {
        for (std::size_t i = 0; i < box.size(); ++i) {
            auto k = box.freq(i);
            const std::size_t j = box.index(-k[0], -k[1]);
            if (j < i) c.coeffs[i] = std::conj(c.coeffs[j]);
            if (j == i) c.coeffs[i] = c.coeffs[i].real();
        }
    }
    return c;
}

inline Vec random_vec(std::mt19937_64& rng, Eigen::Index n) {
    std::normal_distribution<double> nd;
    Vec v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = cplx(nd(rng), nd(rng));
    return v;
}

// |z|^q through |z|^2, with the common even and cubic exponents spelled out.
inline double abs_pow(cplx z, double q) {
    const double a = std::norm(z);
    if (q == 4) return a * a;
    if (q == 6) return a * a * a;
    if (q == 3) return a * std::sqrt(a);
    return std::pow(a, q / 2);
}

// Derivative-free maximizer of ||A a||_q / ||a||_2 for a dense A: uniform
// random sampling followed by coordinate-wise random search from the best
// samples.  Every trial vector counts against `budget`.
inline double monte_carlo_2q(const Mat& A, double q, std::mt19937_64& rng, long budget = 1000000) {
    const Eigen::Index n = A.cols();
    auto value = [&](const Vec& a) {
        Vec y = A * a;
        double s = 0;
        for (Eigen::Index i = 0; i < y.size(); ++i) s += abs_pow(y[i], q);
        return std::pow(s, 1 / q) / a.norm();
    };
    boost::random::normal_distribution<double> nd;
    const long sample_budget = budget / 2;
    const int keep = 8;
    std::vector<std::pair<double, Vec>> best;
    const Eigen::Index batch = 4096;
    long used = 0;
    while (used < sample_budget) {
        Eigen::Index b = std::min<Eigen::Index>(batch, sample_budget - used);
        Mat X(n, b);
        for (Eigen::Index j = 0; j < b; ++j)
            for (Eigen::Index i = 0; i < n; ++i) X(i, j) = cplx(nd(rng), nd(rng));
        Mat Y = A * X;
        for (Eigen::Index j = 0; j < b; ++j) {
            double s = 0;
            for (Eigen::Index i = 0; i < Y.rows(); ++i) s += abs_pow(Y(i, j), q);
            const double v = std::pow(s, 1 / q) / X.col(j).norm();
            if (best.size() < std::size_t(keep) || v > best.back().first) {
                best.emplace_back(v, X.col(j));
                std::sort(best.begin(), best.end(), [](auto& a, auto& c) { return a.first > c.first; });
                if (best.size() > std::size_t(keep)) best.pop_back();
            }
        }
        used += b;
    }
    // coordinate moves: y = A x is updated in O(rows) per trial
    double top = best.front().first;
    const long per = (budget - sample_budget) / keep;
    std::uniform_int_distribution<Eigen::Index> coord(0, n - 1);
    for (auto& [v, a] : best) {
        double step = 0.3;
        Vec x = a / a.norm();
        Vec y = A * x;
        double nx2 = 1, s = 0;
        for (Eigen::Index r = 0; r < y.size(); ++r) s += abs_pow(y[r], q);
        double fx = std::pow(s, 1 / q);
        long accepted = 0;
        for (long t = 0; t < per; ++t) {
            const Eigen::Index i = coord(rng);
            const cplx delta = step * std::sqrt(nx2) * cplx(nd(rng), nd(rng));
            double st = 0;
            for (Eigen::Index r = 0; r < y.size(); ++r) st += abs_pow(y[r] + delta * A(r, i), q);
            const double n2 = nx2 + 2 * std::real(std::conj(x[i]) * delta) + std::norm(delta);
            const double ft = std::pow(st, 1 / q) / std::sqrt(n2);
            if (ft > fx) {
                x[i] += delta;
                y += delta * A.col(i);
                nx2 = n2;
                fx = ft;
                step *= 1.5;
                if (++accepted % 512 == 0) {
                    x /= x.norm();
                    y = A * x;
                    nx2 = 1;
                }
            } else {
                step *= 0.97;
            }
            step = std::clamp(step, 1e-7, 1.0);
        }
        top = std::max(top, value(x));
    }
    return top;
}

}  // namespace fmlab::oracle
