#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace fmlab;

namespace {

// Riemann sum of the double integral written in Fourier form: for a field
// band-limited below n/2 the inner sum over x is exact by Parseval.
double slobodeckij_by_modes(const CoeffField& c, int n, double s) {
    const int d = c.box.d;
    const double expo = d + 2 * s;
    double total = 0;
    for (int m1 = -n / 2; m1 < n / 2; ++m1)
        for (int m2 = (d == 1 ? 0 : -n / 2); m2 < (d == 1 ? 1 : n / 2); ++m2) {
            if (m1 == 0 && m2 == 0) continue;
            const double y1 = double(m1) / n, y2 = double(m2) / n;
            double inner = 0;
            for (std::size_t i = 0; i < c.size(); ++i) {
                auto k = c.box.freq(i);
                const double sn = std::sin(pi * (k[0] * y1 + k[1] * y2));
                inner += std::norm(c.coeffs[i]) * 4 * sn * sn;
            }
            total += inner * std::pow(y1 * y1 + y2 * y2, -expo / 2);
        }
    return std::sqrt(total * std::pow(1.0 / n, d));
}

CoeffField single_mode(int d, int N, int k1, int k2 = 0) {
    CoeffField c(FreqBox(d, N));
    c.at(k1, k2) = 1;
    return c;
}

}  // namespace

TEST(Sobolev, FourierSeminormBasics) {
    CoeffField one(FreqBox(1, 4));
    one.at(0) = 5;
    EXPECT_EQ(hs_seminorm(one, 0.7), 0.0);
    EXPECT_NEAR(hs_seminorm(single_mode(1, 4, 3), 0.5), std::sqrt(3.0), 1e-15);
    EXPECT_NEAR(hs_seminorm(single_mode(2, 4, 3, 4), 1.0), 5.0, 1e-14);
    EXPECT_THROW(hs_seminorm(one, 0.0), DomainError);
}

TEST(Sobolev, HBetaMembershipFrontier) {
    // h_0.3 lies in H^s exactly for s < 0.65
    auto c = h_beta_coeffs(0.3, FreqBox(1, 2048));
    std::vector<int> Ns{128, 256, 512, 1024, 2048};
    EXPECT_EQ(classify_divergence(hs_partial_sums(c, 0.6, Ns)).verdict, Divergence::convergent);
    EXPECT_EQ(classify_divergence(hs_partial_sums(c, 0.7, Ns)).verdict, Divergence::divergent);
}

TEST(Sobolev, AnisotropicBasics) {
    CoeffField one(FreqBox(2, 3));
    one.at(0, 0) = 1;
    EXPECT_EQ(aniso_seminorm(one, AnisoParams({0.5, 0.5})), 0.0);
    EXPECT_NEAR(aniso_seminorm(single_mode(2, 4, 2, 3), AnisoParams({1.0, 0.5})), std::sqrt(7.0), 1e-14);
    AnisoParams p({0.5, 0.25});
    EXPECT_NEAR(p.ell(), 6.0, 1e-15);
    EXPECT_NEAR(p.alpha(0), 0.5 * (1 - 3.0), 1e-15);
    EXPECT_THROW(aniso_seminorm(one, AnisoParams({0.5})), PreconditionError);
}

TEST(Sobolev, EqualOrdersBracketIsotropic) {
    std::mt19937_64 rng(21);
    for (double s : {0.3, 0.6, 0.9}) {
        auto c = oracle::random_coeffs(FreqBox(2, 8), rng);
        const double iso = hs_seminorm(c, s), an = aniso_seminorm(c, AnisoParams({s, s}));
        EXPECT_LE(iso, an * (1 + 1e-12));
        EXPECT_LE(an, std::pow(2.0, (1 - s) / 2) * iso * (1 + 1e-12));
    }
}

TEST(Sobolev, SlobodeckijMatchesModeFormula) {
    std::mt19937_64 rng(22);
    for (int d : {1, 2}) {
        const int n = d == 1 ? 64 : 16;
        const int N = d == 1 ? 20 : 5;
        TorusGrid g(d, n);
        for (double s : {0.3, 0.7}) {
            auto c = oracle::random_coeffs(FreqBox(d, N), rng);
            auto f = synthesize(c, g);
            const double exact = slobodeckij_by_modes(c, n, s);
            EXPECT_NEAR(slobodeckij_seminorm(f, s, 2), exact, 1e-10 * exact) << d << " " << s;
            SlobodeckijOptions direct;
            direct.force_direct = true;
            EXPECT_NEAR(slobodeckij_seminorm(f, s, 2, direct), exact, 1e-10 * exact);
        }
    }
}

TEST(Sobolev, SlobodeckijToFourierRatioIsModeAverage) {
    // seminorm^2 / hs^2 is a weighted mean of the single-mode ratios
    std::mt19937_64 rng(23);
    const int n = 64, N = 12;
    TorusGrid g(1, n);
    const double s = 0.4;
    double lo = 1e300, hi = 0;
    for (int k = 1; k <= N; ++k) {
        auto e = single_mode(1, N, k);
        const double r = slobodeckij_seminorm(synthesize(e, g), s, 2) / hs_seminorm(e, s);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    EXPECT_GT(lo, 0.1);
    EXPECT_LT(hi, 10.0);
    for (int t = 0; t < 20; ++t) {
        auto c = oracle::random_coeffs(FreqBox(1, N), rng);
        const double r = slobodeckij_seminorm(synthesize(c, g), s, 2) / hs_seminorm(c, s);
        EXPECT_GE(r, lo * (1 - 1e-12));
        EXPECT_LE(r, hi * (1 + 1e-12));
    }
}

TEST(Sobolev, SlobodeckijOfConstantVanishes) {
    TorusGrid g(2, 16);
    auto f = sample(g, [](const Point&) { return 3.0; });
    EXPECT_EQ(slobodeckij_seminorm(f, 0.5, 2), 0.0);
    EXPECT_EQ(slobodeckij_seminorm(f, 0.5, 3), 0.0);
}

TEST(Sobolev, SlobodeckijGrowsWithOrder) {
    TorusGrid g(1, 128);
    auto f = w_beta(BetaParams(0.3), g);
    double prev = 0;
    for (double s : {0.1, 0.3, 0.5, 0.7, 0.9}) {
        const double v = slobodeckij_seminorm(f, s, 2);
        EXPECT_GT(v, prev);
        prev = v;
    }
}

TEST(Sobolev, W03RefinementFrontier) {
    // w_0.3 belongs to W^{s,2} for s < 0.8
    auto f = [](const Point& x) { return cplx(w_beta_value(BetaParams(0.3), x)); };
    std::vector<int> ns;
    for (int e = 9; e <= 16; ++e) ns.push_back(1 << e);
    EXPECT_EQ(classify_divergence(slobodeckij_refinement(f, 1, ns, 0.7, 2)).verdict, Divergence::convergent);
    EXPECT_EQ(classify_divergence(slobodeckij_refinement(f, 1, ns, 0.9, 2)).verdict, Divergence::divergent);
}

TEST(Sobolev, IntegerOrderUsesDerivative) {
    TorusGrid g(1, 64);
    auto f = sample(g, [](const Point& x) { return std::sin(2 * pi * x[0]); });
    EXPECT_NEAR(sobolev_seminorm(f, 1.0, 2), 2 * pi / std::sqrt(2.0), 1e-12);
    EXPECT_NEAR(sobolev_seminorm(f, 2.0, 2), 4 * pi * pi / std::sqrt(2.0), 1e-10);
    // s = 1.5: derivative is 2 pi cos, whose order-1/2 seminorm scales by 2 pi
    EXPECT_NEAR(sobolev_seminorm(f, 1.5, 2), 2 * pi * slobodeckij_seminorm(f, 0.5, 2), 1e-9);
}

TEST(Sobolev, LineRestrictionOfSumOfSeparableTerms) {
    TorusGrid g(2, 32), line(1, 32);
    auto a = [](double x) { return std::cos(2 * pi * x) + 0.3 * std::sin(6 * pi * x); };
    auto b = [](double y) { return std::sin(4 * pi * y); };
    auto F = sample(g, [&](const Point& x) { return a(x[0]) + b(x[1]); });
    const double sa = slobodeckij_seminorm(sample(line, [&](const Point& x) { return a(x[0]); }), 0.4, 2);
    const double sb = slobodeckij_seminorm(sample(line, [&](const Point& x) { return b(x[0]); }), 0.4, 2);
    EXPECT_NEAR(line_restriction_seminorm(F, 0.4, 2), sa * sa + sb * sb, 1e-10);
    auto G = sample(g, [&](const Point& x) { return a(x[0]); });
    EXPECT_NEAR(line_restriction_seminorm(G, 0.4, 2), sa * sa, 1e-10);
}

TEST(Sobolev, LineRestrictionComparableToFullSeminorm) {
    std::mt19937_64 rng(24);
    TorusGrid g(2, 16);
    std::vector<double> ratio;
    for (int t = 0; t < 10; ++t) {
        auto f = synthesize(oracle::random_coeffs(FreqBox(2, 5), rng), g);
        ratio.push_back(line_restriction_seminorm(f, 0.5, 2) / std::pow(slobodeckij_seminorm(f, 0.5, 2), 2));
    }
    for (double r : ratio) {
        EXPECT_GT(r, 0.05);
        EXPECT_LT(r, 20.0);
    }
}

TEST(Sobolev, BallSeminormOfLinearFunction) {
    // int int_{[-a,a]^2} |x-y|^{1-2s} = 2 L^{3-2s} / ((2-2s)(3-2s)), L = 2a
    const double s = 0.6, a = 0.2, L = 2 * a;
    const double exact = 2 * std::pow(L, 3 - 2 * s) / ((2 - 2 * s) * (3 - 2 * s));
    TorusGrid g(1, 2048);
    auto f = sample(g, [](const Point& x) { return x[0]; });
    const double v = ball_slobodeckij_pow(f, Ball{{0, 0}, a}, s, 2);
    EXPECT_NEAR(v, exact, 0.01 * exact);
}

TEST(Sobolev, BallLpNorm) {
    TorusGrid g(2, 256);
    auto one = sample(g, [](const Point&) { return 1.0; });
    const double rho = 0.2;
    EXPECT_NEAR(std::pow(ball_lp_norm(one, Ball{{0.1, -0.2}, rho}, 2), 2), pi * rho * rho, 2e-3);
}

TEST(Sobolev, HolderQuotientBasics) {
    TorusGrid g(1, 512);
    auto c = sample(g, [](const Point&) { return 2.0; });
    EXPECT_EQ(holder_quotient(c, 0.5, ScaleWindow{}), 0.0);
    auto e = sample(g, [](const Point& x) { return std::exp(cplx(0, 2 * pi * x[0])); });
    EXPECT_LE(holder_quotient(e, 0.5, ScaleWindow{}), 2 * pi * std::sqrt(0.5));
    EXPECT_THROW(holder_quotient(e, 1.0, ScaleWindow{}), DomainError);
}

TEST(Sobolev, W03HolderExponent) {
    std::vector<double> q;
    for (int e = 8; e <= 12; ++e) q.push_back(holder_quotient(w_beta(BetaParams(0.3), TorusGrid(1, 1 << e)), 0.3, ScaleWindow{}));
    for (double v : q) EXPECT_LT(v, 2.0);
    EXPECT_LT(q.back(), q.front() * 1.1);

    TorusGrid g(1, 4096);
    auto w = w_beta(BetaParams(0.3), g);
    ScanSeries s("holder_window");
    for (int j = 4; j <= 8; ++j) {
        const double t = std::ldexp(1.0, -j);
        ScaleWindow win{t / 2, t, true, Ball{{0, 0}, 2 * t}};
        s.push(t, holder_quotient(w, 0.5, win));
    }
    EXPECT_NEAR(loglog_fit(s).slope, -0.2, 0.05);
}

TEST(Sobolev, AxisHolderForMixedRegularity) {
    auto f = [](const Point& x) { return std::pow(std::abs(wrap(x[0])), 0.3) + std::pow(std::abs(wrap(x[1])), 0.6); };
    std::vector<double> q0, q1;
    for (int n : {64, 128, 256}) {
        auto F = sample(TorusGrid(2, n), f);
        q0.push_back(axis_holder_quotient(F, 0, 0.3, ScaleWindow{}));
        q1.push_back(axis_holder_quotient(F, 1, 0.6, ScaleWindow{}));
    }
    for (int i = 1; i < 3; ++i) {
        EXPECT_LE(q0[i], q0[0] * 1.1);
        EXPECT_LE(q1[i], q1[0] * 1.1);
    }
    // the rougher axis fails the smoother exponent
    auto F = sample(TorusGrid(2, 256), f);
    EXPECT_GT(axis_holder_quotient(F, 0, 0.6, ScaleWindow{}), 2 * q1.back());
}

TEST(Sobolev, ParameterChecks) {
    EXPECT_THROW(SobolevParams(0.0, 2), DomainError);
    EXPECT_THROW(SobolevParams(0.5, 1.0), DomainError);
    EXPECT_NEAR(SobolevParams(0.75, 2).alpha(1), 0.25, 1e-15);
    TorusGrid g(1, 16);
    SampleField f(g);
    EXPECT_THROW(slobodeckij_seminorm(f, 1.0, 2), DomainError);
    EXPECT_THROW(slobodeckij_seminorm(f, 0.5, HUGE_VAL), DomainError);
}
